#pragma once

// Localised transport controls.  A target theta1 is reached by the linear
// transport problem d_t theta + ybar d2 theta = g, theta(0) = 0, with g
// supported in the control strip: during rest window k the band currently
// parked on the strip receives the full-domain reference control squeezed
// into that window.

#include <memory>
#include <optional>
#include <sstream>

#include "bqc/quadrature.hpp"
#include "bqc/return_method.hpp"

namespace bqc {

// A source that can be sampled on the grid translated vertically by `shift`:
// values at (x1_i, x2_j + shift), optionally differentiated in x1.
class SpaceTimeSource {
 public:
  virtual ~SpaceTimeSource() = default;
  virtual ScalarField sample(double t, double shift, bool dx1 = false) const = 0;
  virtual std::vector<double> breakpoints() const { return {}; }
  // False when the source is known to vanish at t.
  virtual bool active(double) const { return true; }
};

struct TransportQuadrature {
  int nodes = 12;     // Gauss points per panel
  int subpanels = 2;  // equal splits of each breakpoint panel
};

// Characteristics: theta(x, t) = init(x - P(t)) + int_0^t w(s) f(x + P(s) - P(t), s) ds
// with P the drift displacement (P(0) = 0).  The optional weight w(s) lets
// the same routine integrate moments of the source.
inline ScalarField solve_transport(const DriftProfile& drift, const SpaceTimeSource* source,
                                   const ScalarField& init, double t, TransportQuadrature quad = {},
                                   const std::function<double(double)>& weight = {}, bool dx1 = false) {
  const double Pt = drift.displacement(t);
  ScalarField out = transform_inverse(shift_x2(transform_forward(init), drift.displacement(0.0) - Pt));
  if (!source || t <= 0.0) return out;
  auto br = drift.breakpoints();
  for (double b : source->breakpoints()) br.push_back(b);
  const QuadratureRule q = composite_gauss(0.0, t, br, quad.nodes, quad.subpanels);
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    const double s = q.nodes[k];
    if (!source->active(s)) continue;
    const double w = q.weights[k] * (weight ? weight(s) : 1.0);
    if (w == 0.0) continue;
    out.axpy(w, source->sample(s, drift.displacement(s) - Pt, dx1));
  }
  return out;
}

// Ramp for the reference state theta~(t) = kappa(t) theta1~: flat at both
// ends, so the resulting control is smooth in time without mollification.
inline ProfileJet ramp_kappa(double t) { return smooth_step_jet(t); }

struct SmoothedTarget {
  ScalarField field;
  int level = 0;        // modes with k1, k2 <= level are kept
  double error = 0.0;   // ||theta1 - theta1~||_{m-1}
  double bound = 0.0;   // eps ||theta1||_m
  double growth = 0.0;  // ||theta1~||_{m+1} / ||theta1||_m
};

// Lowest square truncation inside the dealiased band meeting
// ||theta1 - P_L theta1||_{m-1} < eps ||theta1||_m, found by bisection.
inline SmoothedTarget smooth_target(const ScalarField& theta1, double eps, int m = 3) {
  if (theta1.parity() != Parity::even)
    throw std::invalid_argument("smooth_target: temperature targets have even parity");
  const auto c = transform_forward(theta1);
  const Grid& g = *theta1.grid();
  const double norm_m = sobolev_norm(c, m);
  SmoothedTarget r;
  r.bound = eps * norm_m;
  if (norm_m == 0.0) {
    r.field = theta1;
    return r;
  }
  auto err_at = [&](int L) {
    auto tc = truncate(c, L, L);
    auto d = c;
    for (std::size_t k = 0; k < d.data().size(); ++k) d.data()[k] -= tc.data()[k];
    return sobolev_norm(d, m - 1);
  };
  int hi = std::min(g.dealias_k1(), g.dealias_k2());
  const int band_hi = hi;
  if (!(err_at(hi) < r.bound)) {
    std::ostringstream msg;
    msg << "smooth_target: truncation to the dealiased band (" << band_hi << ") leaves error "
        << err_at(hi) << " >= " << r.bound << "; the target is under-resolved on this grid";
    throw std::runtime_error(msg.str());
  }
  int lo = 0;
  if (err_at(0) < r.bound) hi = 0;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (err_at(mid) < r.bound ? hi : lo) = mid;
  }
  auto tc = truncate(c, hi, hi);
  r.level = hi;
  r.error = err_at(hi);
  r.field = transform_inverse(tc);
  r.growth = sobolev_norm(tc, m + 1) / norm_m;
  return r;
}

// Full-domain reference control g~(x, r) = kappa'(r) theta1~ + kappa(r) ybar(r) d2 theta1~.
class ReferenceControl : public SpaceTimeSource {
 public:
  ReferenceControl(const ScalarField& target, DriftProfile drift)
      : c_(transform_forward(target)), d2c_(differentiate(c_, Axis::x2)), drift_(std::move(drift)) {
    if (target.parity() != Parity::even)
      throw std::invalid_argument("ReferenceControl: target must have even parity");
  }

  // Coefficients of g~(., r) translated by `shift` in x2.
  SpectralCoeffs coeffs(double r, double shift) const {
    const ProfileJet k = ramp_kappa(r);
    const double a = k.derivative(1), b = k.value() * drift_.velocity(r);
    SpectralCoeffs out = c_;
    auto& o = out.data();
    const auto& d = d2c_.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * o[i] + b * d[i];
    return shift == 0.0 ? out : shift_x2(std::move(out), shift);
  }

  ScalarField sample(double r, double shift, bool dx1 = false) const override {
    auto c = coeffs(r, shift);
    return transform_inverse(dx1 ? differentiate(c, Axis::x1) : c);
  }
  std::vector<double> breakpoints() const override { return drift_.breakpoints(); }

  const SpectralCoeffs& target_coeffs() const { return c_; }
  const DriftProfile& drift() const { return drift_; }

 private:
  SpectralCoeffs c_, d2c_;
  DriftProfile drift_;
};

// Localised control g(x, t) = chi(x2) / tbar * g~(Y(x, t, r), r) during rest
// window k with r = (t - t_a^k) / tbar, zero elsewhere.
class TransportControl : public SpaceTimeSource {
 public:
  TransportControl(const ScalarField& target, DriftProfile drift, Cutoff chi)
      : ref_(target, drift), drift_(std::move(drift)), chi_(std::move(chi)), grid_(target.grid()) {}

  const ReferenceControl& reference() const { return ref_; }
  const DriftProfile& drift() const { return drift_; }
  const Cutoff& cutoff() const { return chi_; }

  bool active(double t) const override { return drift_.rest_window(t) >= 0; }

  ScalarField sample(double t, double shift, bool dx1 = false) const override {
    const int k = drift_.rest_window(t);
    if (k < 0) return ScalarField(grid_, dx1 ? Parity::odd : Parity::even);
    const auto& p = drift_.partition();
    const double r = (t - p.ta[k]) / p.tbar;
    auto c = ref_.coeffs(r, shift + drift_.displacement(r) - drift_.displacement(t));
    ScalarField f = transform_inverse(dx1 ? differentiate(c, Axis::x1) : c);
    apply_cutoff(f, shift);
    return f;
  }

  // Domain mean of g(., t) from the k1 = 0 row only (the x1 mean of a cosine
  // series is its zeroth coefficient), equal to the grid integral of sample().
  double mean(double t) const {
    const int k = drift_.rest_window(t);
    if (k < 0) return 0.0;
    const auto& p = drift_.partition();
    const double r = (t - p.ta[k]) / p.tbar;
    const double shift = drift_.displacement(r) - drift_.displacement(t);
    const ProfileJet kap = ramp_kappa(r);
    const double a = kap.derivative(1), b = kap.value() * drift_.velocity(r);
    const Grid& g = *grid_;
    const int nyq = g.nx2() / 2;
    const auto& c = ref_.target_coeffs();
    detail::CompensatedSum s;
    for (int j = 0; j < g.nx2(); ++j) {
      const double x = g.x2(j);
      const double ch = chi_.chi(x);
      if (ch == 0.0) continue;
      const double y = x + shift;
      double v = c(0, 0).real() * a;
      for (int k2 = 1; k2 < nyq; ++k2) v += 2.0 * (c(0, k2) * cplx(a, b * k2) * std::polar(1.0, k2 * y)).real();
      v += a * c(0, nyq).real() * std::cos(nyq * y);
      s.add(ch * v);
    }
    return s.value() / (g.nx2() * p.tbar);
  }

  std::vector<double> breakpoints() const override {
    std::vector<double> b = drift_.breakpoints();
    const auto& p = drift_.partition();
    const auto inner = drift_.breakpoints();
    for (int k = 0; k < p.K; ++k)
      for (double n : inner)
        if (n > 0.0 && n < 1.0) b.push_back(p.ta[k] + p.tbar * n);
    return b;
  }

 private:
  void apply_cutoff(ScalarField& f, double shift) const {
    const Grid& g = *grid_;
    std::vector<double> row(g.nx2());
    for (int j = 0; j < g.nx2(); ++j) row[j] = chi_.chi(g.x2(j) + shift) / drift_.partition().tbar;
    auto& v = f.values();
    for (int i = 0; i < g.nx1(); ++i)
      for (int j = 0; j < g.nx2(); ++j) v[std::size_t(i) * g.nx2() + j] *= row[j];
  }

  ReferenceControl ref_;
  DriftProfile drift_;
  Cutoff chi_;
  GridPtr grid_;
};

inline TransportQuadrature default_transport_quadrature() { return {12, 2}; }

struct EqualIntegralsReport {
  double max_deviation = 0.0;   // localised vs reference, max over the grid
  double target_deviation = 0.0;  // localised vs theta1~
};

// Compares int_0^1 g(Y(x, 0, s), s) ds with int_0^1 g~(Y(x, 0, r), r) dr on
// the whole grid; the reference integral equals theta1~ because kappa(1) = 1.
inline EqualIntegralsReport verify_equal_integrals(const TransportControl& g, const ScalarField& target,
                                                   TransportQuadrature quad = {16, 4}) {
  const GridPtr& grid = target.grid();
  ScalarField zero(grid, Parity::even);
  const ScalarField loc = solve_transport(g.drift(), &g, zero, 1.0, quad);
  const ScalarField ref = solve_transport(g.drift(), &g.reference(), zero, 1.0, quad);
  return {(loc - ref).max_abs(), (loc - target).max_abs()};
}

}  // namespace bqc
