#include <catch_amalgamated.hpp>

#include "bqc/profiles.hpp"
#include "bqc/quadrature.hpp"

using namespace bqc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("jet derivatives match closed forms", "[jet]") {
  // f = exp(x) / (1 + x^2): f' = exp(x) (1 - x)^2 / (1 + x^2)^2
  const double x0 = 0.3;
  auto v = Jet<4>::variable(x0);
  auto f = exp(v) / (1.0 + v * v);
  CHECK_THAT(f.value(), WithinRel(std::exp(x0) / (1 + x0 * x0), 1e-15));
  CHECK_THAT(f.derivative(1),
             WithinRel(std::exp(x0) * std::pow(1 - x0, 2) / std::pow(1 + x0 * x0, 2), 1e-14));
  // exp(2x): k-th derivative 2^k e^{2x}
  auto e = exp(2.0 * v);
  for (int k = 0; k <= 4; ++k) CHECK_THAT(e.derivative(k), WithinRel(std::pow(2, k) * std::exp(2 * x0), 1e-14));
}

TEST_CASE("smooth step is symmetric, flat at the ends and has the known slope peak", "[profiles]") {
  CHECK(smooth_step(0.0) == 0.0);
  CHECK(smooth_step(1.0) == 1.0);
  CHECK_THAT(smooth_step(0.5), WithinAbs(0.5, 1e-15));
  double peak = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double y = k / 1000.0;
    CHECK_THAT(smooth_step(y) + smooth_step(1 - y), WithinAbs(1.0, 1e-14));
    peak = std::max(peak, smooth_step_jet(y).derivative(1));
  }
  // S'(1/2) = 2 by direct differentiation at the symmetric point
  CHECK_THAT(peak, WithinAbs(2.0, 1e-6));
  CHECK(smooth_step(1e-8) < 1e-30);
  // derivatives against central differences
  for (double y : {0.2, 0.45, 0.8}) {
    const double h = 1e-5;
    const auto j = smooth_step_jet(y);
    const auto jp = smooth_step_jet(y + h), jm = smooth_step_jet(y - h);
    for (int k = 0; k < 4; ++k) {
      const double fd = (jp.derivative(k) - jm.derivative(k)) / (2 * h);
      CHECK_THAT(j.derivative(k + 1), WithinRel(fd, 1e-6));
    }
  }
}

TEST_CASE("bump primitives integrate their bumps", "[profiles]") {
  for (BumpKind k : {BumpKind::smooth, BumpKind::poly2, BumpKind::poly3}) {
    CHECK(bump_primitive(k, 0.0).value() == 0.0);
    CHECK_THAT(bump_primitive(k, 1.0).value(), WithinAbs(1.0, 1e-15));
    // independent quadrature of the bump itself
    const auto q = composite_gauss(0.0, 0.37, {}, 20, 4);
    double s = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i)
      s += q.weights[i] * bump_primitive(k, q.nodes[i]).derivative(1);
    CHECK_THAT(bump_primitive(k, 0.37).value(), WithinAbs(s, 1e-13));
  }
  const double y = 0.3;
  CHECK_THAT(bump_primitive(BumpKind::poly2, y).derivative(1), WithinRel(30 * y * y * std::pow(1 - y, 2), 1e-14));
  CHECK_THAT(bump_primitive(BumpKind::poly3, y).derivative(1), WithinRel(140 * std::pow(y * (1 - y), 3), 1e-14));
  CHECK_THROWS(parse_bump_kind("cubic"));
}

TEST_CASE("Gauss-Legendre integrates polynomials exactly", "[quadrature]") {
  for (int n : {1, 2, 5, 12}) {
    auto q = gauss_legendre(n);
    for (int p = 0; p < 2 * n; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += q.weights[i] * std::pow(q.nodes[i], p);
      const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
      CHECK_THAT(s, WithinAbs(exact, 1e-14));
    }
  }
  auto c = composite_gauss(0.0, 2.0, {0.5, 1.5, 3.0}, 6, 2);
  double s = 0.0;
  for (std::size_t i = 0; i < c.nodes.size(); ++i) s += c.weights[i] * std::exp(c.nodes[i]);
  CHECK_THAT(s, WithinRel(std::exp(2.0) - 1.0, 1e-14));
}
