#pragma once

// Vorticity steering by a large initial temperature: starting from
// theta0 - xi / delta, buoyancy pushes w0 towards w0 - d1 xi within time delta.

#include <sstream>

#include "bqc/profiles.hpp"
#include "bqc/solver.hpp"

namespace bqc {

struct TaperOptions {
  bool enabled = false;
  double plateau = 0.9;     // taper equals 1 on [-plateau, plateau]
  int max_refinements = 8;  // plateau <- (1 + plateau) / 2 until the budget holds
};

struct XiProfile {
  ScalarField xi;            // even, mean free
  double error = 0.0;        // ||(w_start - d1 xi) - w_target||_1
  double budget = 0.0;
  double wall_d1 = 0.0;      // max |d1 xi| on x1 = +-1
  double wall_d111 = 0.0;    // max |d111 xi| on x1 = +-1
  double taper_plateau = 1.0;
};

namespace detail {

// Even C-infinity plateau in x1: 1 on |x1| <= p, 0 for |x1| >= (1 + p) / 2.
inline double plateau_taper(double x1, double p) {
  const double edge = 0.5 * (1.0 + p);
  const double a = std::abs(x1);
  if (a <= p) return 1.0;
  if (a >= edge) return 0.0;
  return 1.0 - smooth_step((a - p) / (edge - p));
}

// xi = int_{-1}^{x1} h minus its mean, for h a sine series.  In s = (x1+1)/2,
// int sin(m pi s) dx1 = (2 / (m pi)) (1 - cos(m pi s)).
inline SpectralCoeffs integrate_x1(const SpectralCoeffs& h) {
  const Grid& g = *h.grid();
  SpectralCoeffs xi(h.grid(), Parity::even);
  for (int m = 1; m < g.nx1(); ++m)
    for (int k2 = 0; k2 < g.modes2(); ++k2) {
      const cplx f = h(m, k2) * (2.0 / (m * pi));
      xi(m, k2) -= f;
      xi(0, k2) += f;
    }
  xi(0, 0) = 0.0;
  return xi;
}

inline double wall_max(const SpectralCoeffs& c) {
  double r = 0.0;
  for (int side : {-1, 1})
    for (double v : boundary_trace(c, side)) r = std::max(r, std::abs(v));
  return r;
}

}  // namespace detail

// Builds xi with d1 xi the dealiased projection of (w_start - w_target),
// optionally tapered near the walls.  A finite sine series already has
// d1 xi = d111 xi = 0 on the walls, so the taper is off by default.
inline XiProfile build_xi(const ScalarField& w_start, const ScalarField& w_target, double budget,
                          TaperOptions taper = {}) {
  if (w_start.parity() != Parity::odd || w_target.parity() != Parity::odd)
    throw std::invalid_argument("build_xi: vorticities must have odd parity");
  const ScalarField diff = w_start - w_target;
  const GridPtr& g = diff.grid();

  auto attempt = [&](double plateau) {
    ScalarField h = diff;
    if (taper.enabled)
      for (int i = 0; i < g->nx1(); ++i) {
        const double t = detail::plateau_taper(g->x1(i), plateau);
        for (int j = 0; j < g->nx2(); ++j) h(i, j) *= t;
      }
    const SpectralCoeffs hc = dealias(transform_forward(h));
    XiProfile r;
    const SpectralCoeffs xc = detail::integrate_x1(hc);
    r.xi = transform_inverse(xc);
    r.error = sobolev_norm(diff - transform_inverse(hc), 1);
    r.budget = budget;
    const SpectralCoeffs d1 = differentiate(xc, Axis::x1);
    r.wall_d1 = detail::wall_max(d1);
    r.wall_d111 = detail::wall_max(differentiate(d1, Axis::x1, 2));
    r.taper_plateau = taper.enabled ? plateau : 1.0;
    return r;
  };

  double plateau = taper.plateau;
  XiProfile r = attempt(plateau);
  for (int k = 0; taper.enabled && !(r.error < budget) && k < taper.max_refinements; ++k) {
    plateau = 0.5 * (1.0 + plateau);
    r = attempt(plateau);
  }
  if (!(r.error < budget)) {
    std::ostringstream msg;
    msg << "build_xi: ||(w_start - d1 xi) - w_target||_1 = " << r.error << " exceeds the budget "
        << budget << " at this resolution";
    throw std::runtime_error(msg.str());
  }
  return r;
}

struct VorticityRemainders {
  double q = 0.0;  // ||q(t)||_1
  double r = 0.0;  // ||r(t)||_1
};

// q = w - w0 + (t/delta) d1 xi,
// r = theta + xi/delta - theta0 + (t/delta) tau Lap xi - (U.grad) xi with
// curl U = (t/delta)(w0 - (t/delta) d1 xi / 2), zero mean flow.
inline VorticityRemainders vorticity_remainders(const State& s, double t, const ScalarField& w0,
                                                const ScalarField& theta0, const ScalarField& xi,
                                                double delta, double tau) {
  const double a = t / delta;
  const ScalarField d1xi = differentiate(xi, Axis::x1);
  ScalarField q = s.w - w0;
  q.axpy(a, d1xi);
  ScalarField r = s.theta - theta0;
  r.axpy(1.0 / delta, xi);
  r.axpy(a * tau, laplacian(xi));
  ScalarField curl = w0;
  curl.axpy(-0.5 * a, d1xi);
  curl *= a;
  r -= advect(velocity_from_vorticity(curl, 0.0), xi);
  return {sobolev_norm(q, 1), sobolev_norm(r, 1)};
}

struct VorticitySteeringResult {
  State final_state;
  double error = 0.0;         // e(delta) = ||w(delta) - (w0 - d1 xi)||_1
  VorticityRemainders rem;    // at t = delta
  double theta_excess = 0.0;  // max over steps of ||theta + xi / delta||_2
  std::size_t steps = 0;
};

// Runs from (w0, theta0 - xi / delta) with zero control for time delta.
inline VorticitySteeringResult steer_vorticity(const SimConfig& cfg, const State& s0, const ScalarField& xi,
                                               double delta, const ForcingSpec& forcing = {},
                                               int steps_per_delta = 400) {
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("steer_vorticity: need 0 < delta < 1");
  if (xi.parity() != Parity::even) throw std::invalid_argument("steer_vorticity: xi must have even parity");
  SimConfig c = cfg;
  c.step.dt = std::min(cfg.step.dt, delta / steps_per_delta);
  State start = s0;
  start.theta.axpy(-1.0 / delta, xi);
  VorticitySteeringResult out;
  auto tr = run(c, start, s0.t + delta, forcing, {}, {}, [&](const State& s) {
    ScalarField e = s.theta;
    e.axpy(1.0 / delta, xi);
    out.theta_excess = std::max(out.theta_excess, l2_norm(e));
  });
  out.final_state = tr.final_state;
  out.steps = tr.steps;
  out.error = sobolev_norm(out.final_state.w - (s0.w - differentiate(xi, Axis::x1)), 1);
  out.rem = vorticity_remainders(out.final_state, delta, s0.w, s0.theta, xi, delta, cfg.tau);
  return out;
}

}  // namespace bqc
