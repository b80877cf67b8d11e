#pragma once

// Velocity recovery from vorticity: -Delta psi = w with psi = 0 on the
// walls, u = (d2 psi, -d1 psi) + c e2.  The free constant c is the mean of
// u2 (the x2 mean flow), which the stream function cannot see.

#include "bqc/spectral.hpp"

namespace bqc {

struct VelocityField {
  ScalarField u1;  // odd: vanishes on the walls
  ScalarField u2;  // even
  double mean_coeff = 0.0;
};

inline SpectralCoeffs solve_streamfunction(const SpectralCoeffs& w) {
  if (w.parity() != Parity::odd)
    throw std::invalid_argument("solve_streamfunction: vorticity must have odd parity");
  SpectralCoeffs psi = w;
  const Grid& g = *w.grid();
  for (int k1 = 1; k1 <= g.nx1(); ++k1)
    for (int k2 = 0; k2 < g.modes2(); ++k2) psi(k1, k2) /= laplace_eigenvalue(k1, k2);
  for (int k2 = 0; k2 < g.modes2(); ++k2) psi(0, k2) = 0.0;
  return psi;
}

inline ScalarField solve_streamfunction(const ScalarField& w) {
  return transform_inverse(solve_streamfunction(transform_forward(w)));
}

inline VelocityField velocity_from_psi(const SpectralCoeffs& psi, double mean) {
  SpectralCoeffs u1 = differentiate(psi, Axis::x2);
  SpectralCoeffs u2 = differentiate(psi, Axis::x1);
  u2 *= -1.0;
  // -d1 psi integrates to zero (psi vanishes on both walls); enforce exactly.
  u2(0, 0) = mean;
  return {transform_inverse(u1), transform_inverse(u2), mean};
}

inline VelocityField velocity_from_vorticity(const ScalarField& w, double mean) {
  return velocity_from_psi(solve_streamfunction(transform_forward(w)), mean);
}

struct DivCurlResidual {
  double divergence = 0.0;   // ||div u||_L2
  double curl = 0.0;         // ||curl u - w||_L2
  double wall_normal = 0.0;  // max |u1| on x1 = +-1
  double mean = 0.0;         // |int u2 - mean_coeff|
  double total() const { return divergence + curl + wall_normal + mean; }
};

inline DivCurlResidual divcurl_residual(const VelocityField& u, const ScalarField& w) {
  DivCurlResidual r;
  const auto c1 = transform_forward(u.u1);
  const auto c2 = transform_forward(u.u2);
  r.divergence = l2_norm(transform_inverse(differentiate(c1, Axis::x1)) +
                         transform_inverse(differentiate(c2, Axis::x2)));
  r.curl = l2_norm(transform_inverse(differentiate(c2, Axis::x1)) -
                   transform_inverse(differentiate(c1, Axis::x2)) - w);
  for (int side : {-1, 1})
    for (double v : boundary_trace(c1, side)) r.wall_normal = std::max(r.wall_normal, std::abs(v));
  r.mean = std::abs(integrate_domain(c2) - u.mean_coeff);
  return r;
}

}  // namespace bqc
