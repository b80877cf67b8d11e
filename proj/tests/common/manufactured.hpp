#pragma once

#include <cmath>

#include "bqc/solver.hpp"

namespace bqc::testing {

// Exact solution used for the temporal order check; spatially band-limited so
// only the time discretisation contributes to the error.
struct Manufactured {
  GridPtr g;
  double nu = 0.05, tau = 0.05;

  ScalarField w(double t) const {
    return mode_field(g, Parity::odd, 1, 1, (1 + t), true) + mode_field(g, Parity::odd, 2, 0, 0.3 * std::cos(t));
  }
  ScalarField theta(double t) const {
    ScalarField th = mode_field(g, Parity::even, 1, 2, std::cos(t));
    for (auto& v : th.values()) v += 0.5 * std::sin(t);
    return th;
  }
  double mean(double t) const { return 0.5 * (1 - std::cos(t)); }

  ForcingSpec forcing() const {
    ForcingSpec f;
    f.phi = [this](double t) {
      ScalarField dw = mode_field(g, Parity::odd, 1, 1, 1.0, true) +
                       mode_field(g, Parity::odd, 2, 0, -0.3 * std::sin(t));
      ScalarField wv = w(t);
      auto u = velocity_from_vorticity(wv, mean(t));
      ScalarField r = dw - nu * laplacian(wv) + advect(u, wv) - differentiate(theta(t), Axis::x1);
      return r;
    };
    f.psi = [this](double t) {
      ScalarField dth = mode_field(g, Parity::even, 1, 2, -std::sin(t));
      for (auto& v : dth.values()) v += 0.5 * std::cos(t);
      ScalarField th = theta(t);
      auto u = velocity_from_vorticity(w(t), mean(t));
      return dth - tau * laplacian(th) + advect(u, th);
    };
    return f;
  }
};

inline double manufactured_error(double dt) {
  Manufactured m{Grid::make(16, 16)};
  SimConfig cfg{m.g, m.nu, m.tau, {dt, 0.0}};
  State s0{m.w(0), m.theta(0), 0.0, 0.0};
  auto tr = run(cfg, s0, 1.0, m.forcing());
  const State& s = tr.final_state;
  return sobolev_norm(s.w - m.w(1.0), 1) + sobolev_norm(s.theta - m.theta(1.0), 2) +
         std::abs(s.mean_coeff - m.mean(1.0));
}

}  // namespace bqc::testing
