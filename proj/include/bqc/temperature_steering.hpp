#pragma once

// Temperature steering on the short interval [0, delta].  The unit-time
// transport control G for theta1 - theta0 is rescaled by delta, corrected to
// be mean free, and completed by a cutoff term that drives the mean flow
// along the rescaled drift.

#include <algorithm>
#include <memory>

#include "bqc/solver.hpp"
#include "bqc/transport.hpp"

namespace bqc {

// Linear states of the steering argument, on the unit clock sigma in [0, 1].
// With g_delta = delta G:
//   Theta~ = delta theta0(x - P(sigma))                       (free)
//   Theta^ = delta int_0^sigma G(x + P(s) - P(sigma), s) ds   (controlled)
//   vartheta~ = Theta~ + Theta^ - delta chi M(sigma) / int chi, M = int_0^sigma int G
//   v~ solves d_sigma v + ybar d2 v = d1 vartheta~, v(0) = w0.
class LinearAuxStates {
 public:
  LinearAuxStates(const ScalarField& theta0, const ScalarField& theta1, const DriftProfile& drift,
                  const Cutoff& chi, double delta, double eps, int m = 3, TransportQuadrature quad = {})
      : theta0_(theta0),
        target_(smooth_target(theta1 - theta0, eps, m)),
        G_(target_.field, drift, chi),
        drift_(drift),
        chi_(chi),
        delta_(delta),
        quad_(quad) {
    if (!(delta > 0 && delta < 1)) throw std::invalid_argument("LinearAuxStates: need 0 < delta < 1");
    const GridPtr& g = theta0.grid();
    chi_grid_ = chi.sample(g);
    chi_integral_ = integrate_domain(chi_grid_);
    // pointwise chi', not the spectral derivative of the samples: the latter
    // rings outside the strip because chi is barely resolved
    dchi_ = ScalarField(g, Parity::even);
    ddchi_ = ScalarField(g, Parity::even);
    for (int j = 0; j < g->nx2(); ++j) {
      const ProfileJet c = chi.chi_jet(g->x2(j));
      for (int i = 0; i < g->nx1(); ++i) {
        dchi_(i, j) = c.derivative(1);
        ddchi_(i, j) = c.derivative(2);
      }
    }
    build_mean_panels();
  }

  const SmoothedTarget& target() const { return target_; }
  const TransportControl& control() const { return G_; }
  const DriftProfile& drift() const { return drift_; }
  const Cutoff& cutoff() const { return chi_; }
  double delta() const { return delta_; }
  const ScalarField& chi_grid() const { return chi_grid_; }
  const ScalarField& dchi_grid() const { return dchi_; }
  const ScalarField& ddchi_grid() const { return ddchi_; }
  double chi_integral() const { return chi_integral_; }

  // int_0^sigma int G(., s) ds from cached Gauss panels.
  double mean_integral(double sigma) const {
    if (sigma <= 0.0) return 0.0;
    sigma = std::min(sigma, 1.0);
    const auto it = std::upper_bound(pts_.begin(), pts_.end(), sigma);
    const std::size_t p = std::size_t(it - pts_.begin()) - 1;
    double s = cum_[p];
    if (sigma > pts_[p]) s += panel_mean(pts_[p], sigma);
    return s;
  }

  // int_0^sigma M = sigma M(sigma) - int_0^sigma s m(s) ds.
  double mean_moment(double sigma) const {
    if (sigma <= 0.0) return 0.0;
    sigma = std::min(sigma, 1.0);
    const auto it = std::upper_bound(pts_.begin(), pts_.end(), sigma);
    const std::size_t p = std::size_t(it - pts_.begin()) - 1;
    double s = cum1_[p];
    if (sigma > pts_[p]) s += panel_mean(pts_[p], sigma, true);
    return sigma * mean_integral(sigma) - s;
  }

  // Unit-clock base control eta~[G]; eta~_delta = delta * eta_tilde(sigma).
  ScalarField eta_tilde(double sigma) const { return eta_tilde_from(G_.sample(sigma, 0.0), sigma); }

  // Same, from a precomputed sample of G(., sigma).
  ScalarField eta_tilde_from(ScalarField e, double sigma) const {
    const double m = integrate_domain(e);
    const double M = mean_integral(sigma);
    const double yb = drift_.velocity(sigma);
    if (yb * M != 0.0) e.axpy(-yb * M / chi_integral_, dchi_);
    if (m != 0.0) e.axpy(-m / chi_integral_, chi_grid_);
    return e;
  }

  ScalarField theta_free(double sigma) const { return delta_ * shifted(theta0_, sigma); }

  ScalarField theta_controlled(double sigma) const {
    ScalarField zero(theta0_.grid(), Parity::even);
    return delta_ * solve_transport(drift_, &G_, zero, sigma, quad_);
  }

  ScalarField vartheta(double sigma) const {
    ScalarField r = theta_free(sigma) + theta_controlled(sigma);
    r.axpy(-delta_ * mean_integral(sigma) / chi_integral_, chi_grid_);
    return r;
  }

  // v~(sigma) = w0(x - P) + sigma delta d1 theta0(x - P)
  //            + delta int_0^sigma (sigma - s) d1 G(x + P(s) - P(sigma), s) ds
  ScalarField v(const ScalarField& w0, double sigma) const {
    ScalarField r = shifted(w0, sigma);
    r.axpy(sigma * delta_, shifted(differentiate(theta0_, Axis::x1), sigma));
    ScalarField zero(theta0_.grid(), Parity::odd);
    r.axpy(delta_, solve_transport(drift_, &G_, zero, sigma, quad_,
                                   [sigma](double s) { return sigma - s; }, true));
    return r;
  }

 private:
  ScalarField shifted(const ScalarField& f, double sigma) const {
    return transform_inverse(shift_x2(transform_forward(f), -drift_.displacement(sigma)));
  }

  double panel_mean(double a, double b, bool moment = false) const {
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < gl_.nodes.size(); ++i) {
      const double x = a + h * (gl_.nodes[i] + 1.0);
      s += gl_.weights[i] * G_.mean(x) * (moment ? x : 1.0);
    }
    return h * s;
  }

  void build_mean_panels() {
    gl_ = gauss_legendre(quad_.nodes);
    std::vector<double> b = G_.breakpoints();
    b.push_back(0.0);
    b.push_back(1.0);
    std::sort(b.begin(), b.end());
    std::vector<double> coarse;
    for (double x : b)
      if (x >= 0.0 && x <= 1.0 && (coarse.empty() || x - coarse.back() > 1e-14)) coarse.push_back(x);
    pts_.clear();
    for (std::size_t p = 0; p + 1 < coarse.size(); ++p)
      for (int s = 0; s < quad_.subpanels; ++s)
        pts_.push_back(coarse[p] + s * (coarse[p + 1] - coarse[p]) / quad_.subpanels);
    pts_.push_back(1.0);
    cum_.assign(pts_.size(), 0.0);
    cum1_.assign(pts_.size(), 0.0);
    for (std::size_t p = 0; p + 1 < pts_.size(); ++p) {
      cum_[p + 1] = cum_[p] + panel_mean(pts_[p], pts_[p + 1]);
      cum1_[p + 1] = cum1_[p] + panel_mean(pts_[p], pts_[p + 1], true);
    }
  }

  ScalarField theta0_;
  SmoothedTarget target_;
  TransportControl G_;
  DriftProfile drift_;
  Cutoff chi_;
  double delta_;
  TransportQuadrature quad_;
  ScalarField chi_grid_, dchi_, ddchi_;
  double chi_integral_ = 0.0;
  QuadratureRule gl_;
  std::vector<double> pts_, cum_, cum1_;
};

struct EtaDiagnostics {
  double max_eta_tilde_mean = 0.0;  // max |int eta~| over evaluations
  std::size_t evaluations = 0;
};

// eta_delta(x, t) = delta^-1 eta~[G](x, t/delta)
//   + (ybar_d'' chi - tau ybar_d' chi'' + ybar_d' u2 chi') / int chi
// with ybar_d the rescaled drift and t measured from t0, every cutoff factor
// evaluated pointwise so that the control vanishes off the strip.
inline ScalarField eta_delta(const LinearAuxStates& aux, double tau, double t0, double t, const VelocityField& u,
                             EtaDiagnostics* diag = nullptr) {
  const double delta = aux.delta();
  const double sigma = (t - t0) / delta;
  const DriftProfile& d = aux.drift();
  ScalarField eta = aux.eta_tilde(sigma);
  if (diag) {
    diag->max_eta_tilde_mean = std::max(diag->max_eta_tilde_mean, std::abs(integrate_domain(eta)));
    ++diag->evaluations;
  }
  eta *= 1.0 / delta;
  // ybar_d^(k)(t) = delta^-(k+1) ybar^(k)(sigma)
  const double y1 = d.velocity(sigma, 1) / (delta * delta);
  const double y2 = d.velocity(sigma, 2) / (delta * delta * delta);
  const double ic = aux.chi_integral();
  if (y2 != 0.0) eta.axpy(y2 / ic, aux.chi_grid());
  if (y1 != 0.0) {
    eta.axpy(-tau * y1 / ic, aux.ddchi_grid());
    auto& e = eta.values();
    const auto& u2 = u.u2.values();
    const auto& dc = aux.dchi_grid().values();
    for (std::size_t k = 0; k < e.size(); ++k) e[k] += y1 / ic * u2[k] * dc[k];
  }
  return eta;
}

// Integrates theta under eta_delta as is.  The pointwise cutoff derivatives
// differ from what the spectral solver does to the sampled cutoff, so on
// coarse grids this is far less accurate than the carried form below.
inline ControlSchedule temperature_control_eta(std::shared_ptr<const LinearAuxStates> aux, double tau, double t0,
                                               std::shared_ptr<EtaDiagnostics> diag = {}) {
  ControlSchedule c;
  c.mean_free = false;
  c.eval = [aux, tau, t0, diag](double t, const State&, const VelocityField& u) {
    return eta_delta(*aux, tau, t0, t, u, diag.get());
  };
  return c;
}

// Same trajectory with two cutoff components of theta carried in closed form.
// The solver integrates zeta = theta - ybar_d' chi / int chi + M chi / int chi.
// Subtracting the first component cancels the second part of eta_delta, and
// its integral ybar_d' enters the mean flow directly.  Adding the second
// component cancels the mean corrections in eta~, leaving the source
// delta^-1 G.  The actual transport and diffusion of the stationary
// M chi / int chi are added back through the solver's own operators.  The
// mean flow is corrected for int zeta = M.  zeta = theta wherever
// ybar_d' = 0 and M = 0, in particular at t0 + delta.
// The control eta~ itself is still evaluated, pointwise, for the diagnostics.
inline ControlSchedule temperature_control_carried(std::shared_ptr<const LinearAuxStates> aux, double t0,
                                                   double tau, std::shared_ptr<EtaDiagnostics> diag = {}) {
  ControlSchedule c;
  c.mean_free = false;
  const SpectralCoeffs chi_c = transform_forward(aux->chi_grid());
  const SpectralCoeffs d2chi = differentiate(chi_c, Axis::x2);
  const SpectralCoeffs lap_chi = laplacian(chi_c);
  const DriftProfile dd = aux->drift().rescaled(aux->delta());
  c.eval = [aux, t0, tau, diag, chi_c, d2chi, lap_chi, dd](double t, const State&, const VelocityField& u) {
    const double delta = aux->delta();
    const double sigma = (t - t0) / delta;
    ScalarField g = aux->control().sample(sigma, 0.0);
    if (diag) {
      const ScalarField eta = aux->eta_tilde_from(g, sigma);
      diag->max_eta_tilde_mean = std::max(diag->max_eta_tilde_mean, std::abs(integrate_domain(eta)));
      ++diag->evaluations;
    }
    g *= 1.0 / delta;
    const double M = aux->mean_integral(sigma);
    if (M != 0.0) {
      SpectralCoeffs k = advection_coeffs(u, chi_c, true);
      const double yb = dd.velocity(t - t0);
      auto& kd = k.data();
      for (std::size_t i = 0; i < kd.size(); ++i) kd[i] -= yb * d2chi.data()[i] + tau * lap_chi.data()[i];
      k(0, 0) = 0.0;
      g.axpy(M / aux->chi_integral(), transform_inverse(k));
    }
    return g;
  };
  c.mean_flow_primitive = [aux, dd, t0](double t) {
    return dd.velocity(t - t0) - aux->delta() * aux->mean_moment((t - t0) / aux->delta());
  };
  return c;
}

struct TemperatureSteeringOptions {
  double eps = 0.05;        // smoothing tolerance for theta1 - theta0
  int m = 3;
  double dsigma = 5e-6;     // step on the unit clock, dt = delta * dsigma
  TransportQuadrature quad = {12, 2};
  bool ansatz = true;       // evaluate the linear states at sigma = 1
  bool carry_cutoff_part = true;  // false integrates the full eta_delta directly
  int probe_every = 500;    // steps between evaluations of the physical control off the strip
};

struct TemperatureSteeringResult {
  State final_state;
  double w_error = 0.0;       // ||w(delta) - w0||_1
  double theta_error = 0.0;   // ||theta(delta) - theta1||_2
  double eta_tilde_mean = 0.0;
  double tracking = 0.0;      // max_t |c(t) - c0 - ybar_d(t)|
  double q = 0.0;             // ||w(delta) - v~(1)||_1
  double r = 0.0;             // ||theta(delta) - vartheta~(1) / delta||_2
  double target_gap = 0.0;    // ||vartheta~(1) - delta theta1||_2
  double target_bound = 0.0;  // eps delta ||theta1 - theta0||_3
  double off_strip = 0.0;     // max |eta_delta| outside (a, b) over probed times
  int smoothing_level = 0;
  std::size_t steps = 0;
};

// max |f| over grid columns with x2 outside the control strip (a, b)
inline double max_off_strip(const ScalarField& f, const CutoffGeometry& geo) {
  const Grid& g = *f.grid();
  double r = 0.0;
  for (int j = 0; j < g.nx2(); ++j) {
    const double x2 = g.x2(j);
    if (x2 > geo.a && x2 < geo.b) continue;
    for (int i = 0; i < g.nx1(); ++i) r = std::max(r, std::abs(f(i, j)));
  }
  return r;
}

inline TemperatureSteeringResult steer_temperature(const SimConfig& cfg, const State& s0,
                                                   const ScalarField& theta1, const Cutoff& chi,
                                                   const DriftProfile& drift, double delta,
                                                   const ForcingSpec& forcing = {},
                                                   TemperatureSteeringOptions opt = {}) {
  auto mean_free = [](const ScalarField& f) {
    return std::abs(integrate_domain(f)) <= 1e-12 * (1.0 + f.max_abs());
  };
  if (!mean_free(s0.theta) || !mean_free(theta1))
    throw std::invalid_argument("steer_temperature: theta0 and theta1 must be mean free");
  if (drift.time_scale() != 1.0) throw std::invalid_argument("steer_temperature: pass the unit-time drift");
  auto aux = std::make_shared<LinearAuxStates>(s0.theta, theta1, drift, chi, delta, opt.eps, opt.m, opt.quad);
  auto diag = std::make_shared<EtaDiagnostics>();
  const DriftProfile dd = drift.rescaled(delta);
  SimConfig c = cfg;
  c.step.dt = std::min(cfg.step.dt, delta * opt.dsigma);
  TemperatureSteeringResult out;
  const double t0 = s0.t;
  const ControlSchedule ctl = opt.carry_cutoff_part ? temperature_control_carried(aux, t0, cfg.tau, diag)
                                                    : temperature_control_eta(aux, cfg.tau, t0, diag);
  std::size_t probe = 0;
  auto tr = run(c, s0, t0 + delta, forcing, ctl, {},
                [&](const State& s) {
                  if (opt.probe_every > 0 && probe++ % opt.probe_every == 0) {
                    const auto u = velocity_from_vorticity(s.w, s.mean_coeff);
                    out.off_strip = std::max(out.off_strip, max_off_strip(eta_delta(*aux, cfg.tau, t0, s.t, u),
                                                                          chi.geometry()));
                  }
                  out.tracking = std::max(out.tracking, std::abs(s.mean_coeff - s0.mean_coeff - dd.velocity(s.t - t0)));
                });
  out.final_state = tr.final_state;
  // int zeta - int theta0 is the solver's own value of M(1), which is zero
  // up to the time discretisation of the source mean
  if (opt.carry_cutoff_part) {
    const double M1 = integrate_domain(out.final_state.theta) - integrate_domain(s0.theta);
    out.final_state.theta.axpy(-M1 / aux->chi_integral(), aux->chi_grid());
  }
  out.steps = tr.steps;
  out.w_error = sobolev_norm(out.final_state.w - s0.w, 1);
  out.theta_error = sobolev_norm(out.final_state.theta - theta1, 2);
  out.eta_tilde_mean = diag->max_eta_tilde_mean;
  out.smoothing_level = aux->target().level;
  out.target_bound = opt.eps * delta * sobolev_norm(theta1 - s0.theta, 3);
  if (opt.ansatz) {
    const ScalarField vt = aux->vartheta(1.0);
    out.target_gap = sobolev_norm(vt - delta * theta1, 2);
    out.q = sobolev_norm(out.final_state.w - aux->v(s0.w, 1.0), 1);
    out.r = sobolev_norm(out.final_state.theta - (1.0 / delta) * vt, 2);
  }
  return out;
}

}  // namespace bqc
