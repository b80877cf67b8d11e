#include <catch_amalgamated.hpp>

#include "bqc/spectral.hpp"

using namespace bqc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k)
    m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}
}  // namespace

TEST_CASE("round trip reproduces random fields of both parities", "[spectral]") {
  std::mt19937_64 rng(7);
  for (auto [n1, n2] : {std::pair{64, 64}, std::pair{32, 48}, std::pair{17, 10}}) {
    auto g = Grid::make(n1, n2);
    for (Parity p : {Parity::odd, Parity::even}) {
      ScalarField f(g, p);
      std::normal_distribution<double> nd;
      for (auto& v : f.values()) v = nd(rng);
      ScalarField back = transform_inverse(transform_forward(f));
      CHECK(max_diff(f, back) < 1e-12);
    }
  }
}

TEST_CASE("single modes land on the expected coefficient", "[spectral]") {
  auto g = Grid::make(16, 12);
  auto c = transform_forward(mode_field(g, Parity::odd, 3, 2, 1.5));
  CHECK_THAT(c(3, 2).real(), WithinAbs(0.75, 1e-14));
  CHECK_THAT(c(3, 2).imag(), WithinAbs(0.0, 1e-14));
  auto s = transform_forward(mode_field(g, Parity::even, 0, 4, 2.0, true));
  CHECK_THAT(s(0, 4).imag(), WithinAbs(-1.0, 1e-14));
  auto top = transform_forward(mode_field(g, Parity::odd, 16, 0, 1.0));
  CHECK_THAT(top(16, 0).real(), WithinAbs(1.0, 1e-13));
  auto ny = transform_forward(mode_field(g, Parity::even, 2, 6, 1.0));
  CHECK_THAT(ny(2, 6).real(), WithinAbs(1.0, 1e-13));
}

TEST_CASE("derivatives match analytic derivatives", "[spectral]") {
  auto g = Grid::make(32, 32);
  // f = sin(2 pi s) cos(3 x2), s = (x1 + 1) / 2
  auto f = sample(g, Parity::odd, [](double x1, double x2) {
    return std::sin(2 * pi * (x1 + 1) / 2) * std::cos(3 * x2);
  });
  auto d1 = differentiate(f, Axis::x1);
  CHECK(d1.parity() == Parity::even);
  auto d1_exact = sample(g, Parity::even, [](double x1, double x2) {
    return pi * std::cos(pi * (x1 + 1)) * std::cos(3 * x2);
  });
  CHECK(max_diff(d1, d1_exact) < 1e-12);
  auto d22 = differentiate(f, Axis::x2, 2);
  CHECK(max_diff(d22, -9.0 * f) < 1e-11);
  auto d111 = differentiate(f, Axis::x1, 3);
  auto d111_exact = sample(g, Parity::even, [](double x1, double x2) {
    return -std::pow(pi, 3) * std::cos(pi * (x1 + 1)) * std::cos(3 * x2);
  });
  CHECK(max_diff(d111, d111_exact) < 1e-10);
  // cosine series -> sine series
  auto h = sample(g, Parity::even, [](double x1, double x2) {
    return std::cos(pi * (x1 + 1) / 2) * std::sin(x2);
  });
  auto dh = differentiate(h, Axis::x1);
  auto dh_exact = sample(g, Parity::odd, [](double x1, double x2) {
    return -pi / 2 * std::sin(pi * (x1 + 1) / 2) * std::sin(x2);
  });
  CHECK(max_diff(dh, dh_exact) < 1e-12);
}

TEST_CASE("domain integral uses the normalised measure", "[spectral]") {
  auto g = Grid::make(32, 16);
  auto one = sample(g, Parity::even, [](double, double) { return 1.0; });
  CHECK_THAT(integrate_domain(one), WithinAbs(1.0, 1e-14));
  auto s1 = mode_field(g, Parity::odd, 1, 0, 1.0);
  CHECK_THAT(integrate_domain(s1), WithinAbs(2.0 / pi, 1e-13));
  CHECK_THAT(integrate_domain(transform_forward(s1)), WithinAbs(2.0 / pi, 1e-13));
  auto s3 = mode_field(g, Parity::odd, 3, 0, 1.0);
  CHECK_THAT(integrate_domain(s3), WithinAbs(2.0 / (3 * pi), 1e-13));
  CHECK_THAT(integrate_domain(mode_field(g, Parity::odd, 2, 0, 1.0)), WithinAbs(0.0, 1e-14));
  CHECK_THAT(integrate_domain(mode_field(g, Parity::even, 1, 3, 1.0)), WithinAbs(0.0, 1e-14));
}

TEST_CASE("Sobolev norms agree with hand-computed values", "[spectral]") {
  auto g = Grid::make(32, 32);
  auto f = mode_field(g, Parity::odd, 1, 1, 1.0);
  // mean of sin^2 cos^2 is 1/4; each derivative adds its squared frequency
  CHECK_THAT(sobolev_norm(f, 0), WithinRel(0.5, 1e-13));
  const double a2 = pi * pi / 4, b2 = 1.0;
  CHECK_THAT(sobolev_norm(f, 1), WithinRel(std::sqrt(0.25 * (1 + a2 + b2)), 1e-13));
  const double w2 = 1 + a2 + b2 + a2 * a2 + a2 * b2 + b2 * b2;
  CHECK_THAT(sobolev_norm(f, 2), WithinRel(std::sqrt(0.25 * w2), 1e-13));
  auto s = sample(g, Parity::even, [](double, double x2) { return std::sin(x2); });
  CHECK_THAT(sobolev_norm(s, 0), WithinRel(std::sqrt(0.5), 1e-13));
  // m = 0 agrees with a direct grid mean of f^2 for a band-limited field
  std::mt19937_64 rng(3);
  auto r = random_field(g, Parity::even, 8, 8, rng);
  CHECK_THAT(sobolev_norm(r, 0), WithinRel(std::sqrt(integrate_domain(multiply(r, r))), 1e-12));
}

TEST_CASE("Sobolev norms are monotone in the order", "[spectral][property]") {
  auto g = Grid::make(32, 32);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = random_field(g, trial % 2 ? Parity::odd : Parity::even, 20, 15, rng);
    for (int m = 0; m < 4; ++m) CHECK(sobolev_norm(f, m) <= sobolev_norm(f, m + 1));
  }
}

TEST_CASE("dealiasing keeps exactly the 2/3 band", "[spectral]") {
  auto g = Grid::make(64, 64);
  CHECK(g->dealias_k1() == 42);
  CHECK(g->dealias_k2() == 21);
  std::mt19937_64 rng(5);
  auto c = transform_forward(random_field(g, Parity::odd, 64, 32, rng, 0.0));
  auto d = dealias(c);
  for (int k1 = 0; k1 <= 64; ++k1)
    for (int k2 = 0; k2 <= 32; ++k2) {
      if (k1 > 42 || k2 > 21)
        CHECK(d(k1, k2) == cplx(0.0));
      else
        CHECK(d(k1, k2) == c(k1, k2));
    }
}

TEST_CASE("mean-free projection removes only a constant", "[spectral]") {
  auto g = Grid::make(24, 24);
  std::mt19937_64 rng(9);
  auto f = random_field(g, Parity::even, 10, 10, rng);
  for (auto& v : f.values()) v += 3.25;
  auto p = project_mean_free(f);
  CHECK(std::abs(integrate_domain(p)) < 1e-14);
  const double shift = f.values()[0] - p.values()[0];
  for (std::size_t k = 0; k < f.values().size(); ++k)
    CHECK_THAT(f.values()[k] - p.values()[k], WithinAbs(shift, 1e-13));
  CHECK_THROWS(project_mean_free(mode_field(g, Parity::odd, 1, 0, 1.0)));
}

TEST_CASE("x2 shift and point evaluation agree with the analytic function", "[spectral]") {
  auto g = Grid::make(32, 32);
  auto fn = [](double x1, double x2) {
    return std::cos(pi * (x1 + 1) / 2) * (std::sin(2 * x2) + 0.3 * std::cos(5 * x2));
  };
  auto c = transform_forward(sample(g, Parity::even, fn));
  CHECK_THAT(evaluate(c, 0.123, 4.56), WithinAbs(fn(0.123, 4.56), 1e-13));
  auto shifted = transform_inverse(shift_x2(c, 0.7));
  auto exact = sample(g, Parity::even, [&](double x1, double x2) { return fn(x1, x2 + 0.7); });
  CHECK(max_diff(shifted, exact) < 1e-13);
  // walls: sine series vanish, cosine series have zero normal derivative
  std::mt19937_64 rng(2);
  auto odd = transform_forward(random_field(g, Parity::odd, 20, 10, rng));
  for (double v : boundary_trace(odd, -1)) CHECK(std::abs(v) < 1e-13);
  auto even = transform_forward(random_field(g, Parity::even, 20, 10, rng));
  for (double v : boundary_trace(differentiate(even, Axis::x1), 1)) CHECK(std::abs(v) < 1e-12);
}
