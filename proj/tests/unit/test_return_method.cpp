#include <catch_amalgamated.hpp>

#include "bqc/return_method.hpp"

using namespace bqc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
Cutoff wide_cutoff() { return Cutoff({0.05, 6.2, 0.1, 6.15, 5}); }

double periodic_distance(double a, double b) {
  return std::abs(std::remainder(a - b, 2 * pi));
}
}  // namespace

TEST_CASE("partition nodes are equidistant with 3K + 1 entries", "[return]") {
  auto p1 = build_partition(1);
  auto n1 = p1.nodes();
  REQUIRE(n1.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK_THAT(n1[k], WithinAbs((k + 1) / 5.0, 1e-15));
  auto p4 = build_partition(4);
  auto n4 = p4.nodes();
  REQUIRE(n4.size() == 13);
  CHECK_THAT(p4.tbar, WithinAbs(1.0 / 14.0, 1e-15));
  for (std::size_t k = 1; k < n4.size(); ++k) CHECK_THAT(n4[k] - n4[k - 1], WithinAbs(1.0 / 14.0, 1e-15));
  CHECK(n4.back() < 1.0);
  CHECK_THROWS(build_partition(0));
}

TEST_CASE("cutoff geometry validation and minimal K", "[return]") {
  CHECK_THROWS_AS(Cutoff({0.0, pi, 0.5, 2.5, 12}), std::invalid_argument);
  CHECK_NOTHROW(Cutoff({0.0, pi, 0.5, 2.5, 13}));
  CHECK(minimal_K(0.5, 2.5) == 13);
  CHECK(minimal_K(0.1, 6.15) == 5);
  CHECK_THROWS(Cutoff({0.0, pi, 0.5, 4.0, 20}));  // H2 outside the strip
  try {
    Cutoff({0.0, pi, 0.5, 2.5, 3});
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("(H2 - H1) / 3") != std::string::npos);
  }
}

TEST_CASE("covering identity holds exactly", "[return]") {
  for (int K = 1; K < 40; ++K) CHECK_THAT(3.0 * K * band_width(K) / 4.0, WithinAbs(2 * pi, 1e-13));
}

TEST_CASE("cutoff has the prescribed profile, support and integral", "[return]") {
  const Cutoff chi({0.0, pi, 0.5, 2.5, 13});
  const double l = chi.band();
  for (int k = 0; k <= 1000; ++k) {
    const double x2 = 2 * pi * k / 1000.0;
    const double c = chi.chi(x2);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    const double s = Cutoff::wrap(x2 - 0.5 - l);
    if (s >= l) CHECK(c == 0.0);
    if (s >= l / 4 && s <= 3 * l / 4) CHECK(c == 1.0);
  }
  // chi~(x) + chi~(x + 3l/4) = 1 on (0, l/4)
  for (int k = 1; k < 100; ++k) {
    const double x = l / 4 * k / 100.0;
    CHECK_THAT(chi.profile(x) + chi.profile(x + 0.75 * l), WithinAbs(1.0, 1e-14));
  }
  auto g = Grid::make(8, 2048);
  CHECK_THAT(integrate_domain(chi.sample(g)), WithinAbs(chi.integral(), 1e-10));
}

TEST_CASE("translates of the cutoff form a partition of unity", "[return][property]") {
  for (const Cutoff& chi : {wide_cutoff(), Cutoff({0.0, pi, 0.5, 2.5, 13})}) {
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const double x2 = 2 * pi * k / 10000.0;
      double s = 0.0;
      for (int i = 1; i <= chi.K(); ++i) s += chi.chi(x2 + 3.0 * (i - 1) * chi.band() / 4.0);
      worst = std::max(worst, std::abs(s - 1.0));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("drift satisfies P1, P2 and P3", "[return][property]") {
  for (BumpKind bump : {BumpKind::smooth, BumpKind::poly2, BumpKind::poly3}) {
    const Cutoff chi = wide_cutoff();
    const auto d = DriftProfile::for_cutoff(chi, bump);
    const auto& p = d.partition();
    // P1: no drift before t0c or after tKc
    for (int k = 0; k <= 200; ++k) {
      const double t0 = p.t0c * k / 200.0;
      const double t1 = p.tc.back() + (1.0 - p.tc.back()) * k / 200.0;
      CHECK(d.velocity(t0) == 0.0);
      CHECK(d.velocity(t1) == 0.0);
    }
    // P2: closed integral curves
    CHECK(std::abs(d.B(0.0, 1.0)) < 1e-12);
    for (double x2 : {0.0, 1.0, 4.0}) CHECK(periodic_distance(flow_map(d, {0.3, x2}, 0.0, 1.0).x2, x2) < 1e-12);
    // P3: O_i sits on O throughout [ta, tb]
    for (int i = 1; i <= chi.K(); ++i)
      for (int k = 0; k <= 10; ++k) {
        const double t = p.ta[i - 1] + (p.tb[i - 1] - p.ta[i - 1]) * k / 10.0;
        const double lower = 3.0 * (i - 1) * chi.band() / 4.0;
        CHECK(periodic_distance(flow_map(d, {0.0, lower}, 0.0, t).x2, chi.origin()) < 1e-12);
      }
  }
}

TEST_CASE("displacement is the time integral of the drift", "[return]") {
  const auto d = DriftProfile::for_cutoff(wide_cutoff());
  auto breaks = d.breakpoints();
  for (double t : {0.1, 0.33, 0.5, 0.77, 0.95}) {
    const auto q = composite_gauss(0.0, t, breaks, 20, 16);
    double s = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) s += q.weights[k] * d.velocity(q.nodes[k]);
    CHECK_THAT(d.displacement(t), WithinAbs(s, 1e-11));
  }
  // rescaling to [0, delta] keeps the displacement profile
  const auto dd = d.rescaled(0.05);
  CHECK_THAT(dd.displacement(0.05 * 0.4), WithinAbs(d.displacement(0.4), 1e-14));
  CHECK_THAT(dd.velocity(0.05 * 0.4), WithinRel(d.velocity(0.4) / 0.05, 1e-12));
}

TEST_CASE("translations are minimal representatives", "[return]") {
  const Cutoff chi = wide_cutoff();
  for (int i = 1; i <= chi.K(); ++i) {
    const double A = chi.translation(i);
    CHECK(A > -pi);
    CHECK(A <= pi);
    CHECK(periodic_distance(A, chi.origin() - 3.0 * (i - 1) * chi.band() / 4) < 1e-13);
  }
}

TEST_CASE("partition of unity along the drift during rest windows", "[return][property]") {
  const Cutoff chi = wide_cutoff();
  const auto d = DriftProfile::for_cutoff(chi);
  const auto& p = d.partition();
  for (double r : {0.0, 0.25, 0.6, 1.0})
    for (double x2 : {0.0, 0.7, 2.2, 5.9}) {
      double s = 0.0;
      for (int k = 0; k < p.K; ++k) s += chi.chi(flow_map(d, {0.0, x2}, 0.0, p.ta[k] + r * (p.tb[k] - p.ta[k])).x2);
      CHECK_THAT(s, WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("reference trajectory: temperature mean follows the drift acceleration", "[return]") {
  const Cutoff chi = wide_cutoff();
  ReferenceTrajectory ref(DriftProfile::for_cutoff(chi), chi);
  auto g = Grid::make(8, 1024);
  for (double t : {0.1, 0.25, 0.31, 0.62}) {
    CHECK_THAT(integrate_domain(ref.theta_field(g, t)), WithinAbs(ref.drift().velocity(t, 1), 1e-8 * (1 + std::abs(ref.drift().velocity(t, 1)))));
  }
  // outside (t0c, tKc) everything vanishes
  for (double t : {0.0, 0.5 * chi.K() / (3.0 * chi.K() + 2), 0.999}) {
    if (ref.drift().velocity(t) != 0.0) continue;
    CHECK(ref.theta(1.0, t) == 0.0);
    CHECK(ref.eta(4.0, t) == 0.0);
    CHECK(ref.pressure(3.0, t) == 0.0);
  }
  // pressure gradient equals theta - ybar'
  const double t = 0.2, x2 = 3.0, h = 1e-5;
  CHECK_THAT((ref.pressure(x2 + h, t) - ref.pressure(x2 - h, t)) / (2 * h),
             WithinRel(ref.theta(x2, t) - ref.drift().velocity(t, 1), 1e-7));
}

TEST_CASE("inviscid residual is second order in the time step", "[return]") {
  const Cutoff chi = wide_cutoff();
  ReferenceTrajectory zero(DriftProfile(build_partition(5), std::vector<double>(5, 0.0)), chi);
  std::vector<double> times;
  for (int k = 1; k < 50; ++k) times.push_back(k / 50.0);
  CHECK(zero.residual_inviscid(times, 1e-4) == 0.0);
  ReferenceTrajectory ref(DriftProfile::for_cutoff(chi), chi);
  const double r1 = ref.residual_inviscid(times, 1e-4), r2 = ref.residual_inviscid(times, 5e-5);
  CHECK_THAT(r1 / r2, WithinAbs(4.0, 0.2));
}

TEST_CASE("aligned band origin puts every translation on the grid", "[return]") {
  const double H1 = grid_aligned_H1(0.1, 8, 64);
  CHECK(H1 >= 0.1);
  CHECK(H1 < 0.1 + 4 * pi / 64);
  Cutoff chi({0.0, 2 * pi, H1, 2 * pi - 0.05, 8});
  CHECK(translations_on_grid(chi, 64));
  CHECK(translations_on_grid(chi, 128));
  CHECK_FALSE(translations_on_grid(chi, 48));
  Cutoff off({0.0, 2 * pi, 0.0, 2 * pi, 5});
  CHECK_FALSE(translations_on_grid(off, 64));
  CHECK_THROWS(grid_aligned_H1(0.0, 5, 64));
}
