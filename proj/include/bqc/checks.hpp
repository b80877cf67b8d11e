#pragma once

// Property checks shared by `bqchan validate` and the acceptance runner.
// Each returns the measured worst case; the caller owns the tolerance.

#include <cstring>
#include <random>

#include "bqc/transport.hpp"
#include "bqc/solver.hpp"

namespace bqc::checks {

// Worst of the four div-curl residuals over `count` random odd vorticities.
inline double elliptic_residuals(const GridPtr& g, int count, std::mt19937_64& rng) {
  double worst = 0.0;
  const int l1 = g->dealias_k1(), l2 = g->dealias_k2();
  for (int k = 0; k < count; ++k) {
    const ScalarField w = random_field(g, Parity::odd, l1, l2, rng, 1.0);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    const double c = ud(rng);
    const DivCurlResidual r = divcurl_residual(velocity_from_vorticity(w, c), w);
    worst = std::max({worst, r.divergence, r.curl, r.wall_normal, r.mean});
  }
  return worst;
}

struct DriftReport {
  double p1 = 0.0;  // max |ybar| outside (t0c, tKc)
  double p2 = 0.0;  // |B(0, 1)| and return of sample points, periodic distance
  double p3 = 0.0;  // distance of each band's lower edge from the origin of O during its rest window
};

inline double periodic_distance(double a, double b) { return std::abs(std::remainder(a - b, 2 * pi)); }

inline DriftReport drift_properties(const Cutoff& chi, BumpKind bump, int samples = 200) {
  const DriftProfile d = DriftProfile::for_cutoff(chi, bump);
  const auto& p = d.partition();
  DriftReport r;
  for (int k = 0; k <= samples; ++k) {
    const double t0 = p.t0c * k / samples;
    const double t1 = p.tc.back() + (1.0 - p.tc.back()) * k / samples;
    r.p1 = std::max({r.p1, std::abs(d.velocity(t0)), std::abs(d.velocity(t1))});
  }
  r.p2 = std::abs(d.B(0.0, 1.0));
  for (int k = 0; k < 16; ++k) {
    const double x2 = 2 * pi * k / 16.0;
    r.p2 = std::max(r.p2, periodic_distance(flow_map(d, {0.0, x2}, 0.0, 1.0).x2, x2));
  }
  for (int i = 1; i <= chi.K(); ++i)
    for (int k = 0; k <= 20; ++k) {
      const double t = p.ta[i - 1] + (p.tb[i - 1] - p.ta[i - 1]) * k / 20.0;
      const double lower = 3.0 * (i - 1) * chi.band() / 4.0;
      r.p3 = std::max(r.p3, periodic_distance(flow_map(d, {0.0, lower}, 0.0, t).x2, chi.origin()));
    }
  return r;
}

// max |sum_i chi(x + 3(i-1)l/4) - 1| over n equispaced points.
inline double partition_of_unity(const Cutoff& chi, int n) {
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x2 = 2 * pi * k / n;
    double s = 0.0;
    for (int i = 1; i <= chi.K(); ++i) s += chi.chi(x2 + 3.0 * (i - 1) * chi.band() / 4.0);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

// |3K l_K / 4 - 2 pi| for K = 1..max_K.
inline double covering_identity(int max_K) {
  double worst = 0.0;
  for (int K = 1; K <= max_K; ++K) worst = std::max(worst, std::abs(3.0 * K * band_width(K) / 4.0 - 2 * pi));
  return worst;
}

// Random Neumann-compatible target, band-limited and mean free.
inline ScalarField random_target(const GridPtr& g, int band, std::mt19937_64& rng) {
  return project_mean_free(random_field(g, Parity::even, band, band, rng, 2.0));
}

struct TransportReport {
  double identity = 0.0;       // max |localised - smoothed target| at t = 1
  double reference = 0.0;      // max |localised - reference| at t = 1
  double target_error = 0.0;   // ||theta(1) - theta1||_{m-1}
  double target_bound = 0.0;   // eps ||theta1||_m
  double off_strip = 0.0;      // max |g| outside the strip over sampled times
  double control_norm = 0.0;   // ||g||_{L2(0,1; H^m)}, midpoint rule over the samples
  int level = 0;
};

inline TransportReport transport_identity(const ScalarField& theta1, const Cutoff& chi, BumpKind bump, double eps,
                                          int m, TransportQuadrature quad = {16, 4}) {
  const SmoothedTarget st = smooth_target(theta1, eps, m);
  const DriftProfile d = DriftProfile::for_cutoff(chi, bump);
  const TransportControl g(st.field, d, chi);
  TransportReport r;
  const EqualIntegralsReport e = verify_equal_integrals(g, st.field, quad);
  r.identity = e.target_deviation;
  r.reference = e.max_deviation;
  const ScalarField zero(theta1.grid(), Parity::even);
  const ScalarField th = solve_transport(d, &g, zero, 1.0, quad);
  r.target_error = sobolev_norm(th - theta1, m - 1);
  r.target_bound = st.bound;
  r.level = st.level;
  const Grid& grid = *theta1.grid();
  const CutoffGeometry& geo = chi.geometry();
  const int n = 400;
  double sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const ScalarField s = g.sample((k + 0.5) / n, 0.0);
    sq += std::pow(sobolev_norm(s, m), 2) / n;
    for (int j = 0; j < grid.nx2(); ++j) {
      const double x2 = grid.x2(j);
      if (x2 > geo.a && x2 < geo.b) continue;
      for (int i = 0; i < grid.nx1(); ++i) r.off_strip = std::max(r.off_strip, std::abs(s(i, j)));
    }
  }
  r.control_norm = std::sqrt(sq);
  return r;
}

// Max drift of the temperature mean from its initial value along a free run.
inline double mean_conservation(const SimConfig& cfg, const State& s0, double t_end) {
  const double m0 = integrate_domain(s0.theta);
  double worst = 0.0;
  run(cfg, s0, t_end, {}, {}, {}, [&](const State& s) {
    worst = std::max(worst, std::abs(integrate_domain(s.theta) - m0));
  });
  return worst;
}

inline bool bitwise_equal(const State& a, const State& b) {
  auto same = [](const ScalarField& x, const ScalarField& y) {
    return x.values().size() == y.values().size() &&
           std::memcmp(x.values().data(), y.values().data(), x.values().size() * sizeof(double)) == 0;
  };
  return same(a.w, b.w) && same(a.theta, b.theta) &&
         std::memcmp(&a.mean_coeff, &b.mean_coeff, sizeof(double)) == 0 && a.t == b.t;
}

}  // namespace bqc::checks
