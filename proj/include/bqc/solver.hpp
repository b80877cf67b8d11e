#pragma once

// Pseudospectral time stepping for the vorticity/temperature system
//   w_t - nu Delta w + (u.grad) w = d1 theta + phi
//   theta_t - tau Delta theta + (u.grad) theta = eta + psi
//   c' = int theta
// Diffusion is Crank-Nicolson per mode; advection, buoyancy, forcing and
// control are explicit, second-order Adams-Bashforth with variable step and
// a Heun start.  Transport by the uniform mean flow c is integrated exactly
// as a phase factor (integrating factor), so large drifts cost no accuracy.
// Products are formed on the grid and 2/3-dealiased; the state itself is
// never filtered.

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include "bqc/elliptic.hpp"

namespace bqc {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TimeStepPolicy {
  double dt = 1e-3;  // nominal step
  double cfl = 0.0;  // when positive, dt <= cfl * min(h1, h2) / max|u|
};

struct SimConfig {
  GridPtr grid;
  double nu = 0.05;
  double tau = 0.05;
  TimeStepPolicy step;
  double region_a = 0.0;  // control strip omega = (-1, 1) x (a, b)
  double region_b = 2 * pi;
  bool buoyancy = true;

  void validate() const {
    if (!grid) throw std::invalid_argument("SimConfig: grid is not set");
    if (!(nu > 0) || !(tau > 0)) throw std::invalid_argument("SimConfig: nu and tau must be positive");
    if (!(step.dt > 0)) throw std::invalid_argument("SimConfig: dt must be positive");
    if (!(region_a >= 0 && region_a < region_b && region_b <= 2 * pi))
      throw std::invalid_argument("SimConfig: need 0 <= a < b <= 2 pi for the control strip");
  }
};

struct State {
  ScalarField w;      // odd
  ScalarField theta;  // even
  double mean_coeff = 0.0;
  double t = 0.0;

  static State zero(const GridPtr& g, double t = 0.0) {
    return {ScalarField(g, Parity::odd), ScalarField(g, Parity::even), 0.0, t};
  }
};

struct ForcingSpec {
  std::function<ScalarField(double)> phi;  // odd
  std::function<ScalarField(double)> psi;  // even
};

// Temperature control; may depend on the current state through u.  Controls
// flagged mean_free are checked on every evaluation.  mean_flow_primitive,
// when set, adds F(t + dt) - F(t) to the mean flow on each step: it stands for
// a temperature component carried outside the state whose only effect is
// through its integral.
struct ControlSchedule {
  std::function<ScalarField(double, const State&, const VelocityField&)> eval;
  bool mean_free = true;
  std::function<double(double)> mean_flow_primitive;
  explicit operator bool() const { return bool(eval); }
};

// Coefficients of (u.grad) f.  The fluctuating product is dealiased; the
// uniform mean flow c d2 f is a Fourier multiplier and is applied exactly
// (or left out when the caller carries it separately).
inline SpectralCoeffs advection_coeffs(const VelocityField& u, const SpectralCoeffs& fc, bool with_mean = true) {
  const SpectralCoeffs d2 = differentiate(fc, Axis::x2);
  ScalarField prod = multiply(u.u1, transform_inverse(differentiate(fc, Axis::x1)));
  ScalarField u2 = u.u2;
  if (u.mean_coeff != 0.0)
    for (auto& v : u2.values()) v -= u.mean_coeff;
  prod += multiply(u2, transform_inverse(d2));
  SpectralCoeffs out = dealias(transform_forward(prod));
  if (with_mean && u.mean_coeff != 0.0) {
    auto& o = out.data();
    const auto& d = d2.data();
    for (std::size_t k = 0; k < o.size(); ++k) o[k] += u.mean_coeff * d[k];
  }
  return out;
}

inline ScalarField advect(const VelocityField& u, const ScalarField& f) {
  return transform_inverse(advection_coeffs(u, transform_forward(f)));
}

struct EnergyDiagnostics {
  double w_l2 = 0, w_h1 = 0, theta_l2 = 0, theta_h2 = 0, theta_mean = 0, mean_coeff = 0;
};

inline EnergyDiagnostics energy_diagnostics(const State& s) {
  return {l2_norm(s.w), sobolev_norm(s.w, 1), l2_norm(s.theta), sobolev_norm(s.theta, 2),
          integrate_domain(s.theta), s.mean_coeff};
}

class Integrator {
 public:
  explicit Integrator(SimConfig cfg, ForcingSpec forcing = {}, ControlSchedule control = {})
      : cfg_(std::move(cfg)), forcing_(std::move(forcing)), control_(std::move(control)) {
    cfg_.validate();
  }

  void reset_history() { prev_.reset(); }
  double last_dt() const { return last_dt_; }
  const SimConfig& config() const { return cfg_; }

  // One step of length min(policy dt, dt_cap).
  State advance(const State& s, double dt_cap) {
    Rhs r0 = rhs(s);
    double dt = std::min(nominal_dt(r0.u), dt_cap);
    if (!(dt > 0)) throw SolverError("non-positive time step");
    const auto w0 = transform_forward(s.w);
    const auto th0 = transform_forward(s.theta);
    Update out;
    if (!prev_) {
      Update pred = implicit_update(s, w0, th0, r0.w, r0.theta, dt);
      Rhs r1 = rhs(pred.state);
      auto nw = r0.w, nth = r0.theta;
      nw *= 0.5;
      nth *= 0.5;
      out = implicit_update(s, w0, th0, nw, nth, dt, &r1);
    } else {
      const double ratio = dt / prev_->dt;
      auto nw = r0.w, nth = r0.theta;
      combine(nw, 1.0 + 0.5 * ratio, prev_->w, -0.5 * ratio);
      combine(nth, 1.0 + 0.5 * ratio, prev_->theta, -0.5 * ratio);
      out = implicit_update(s, w0, th0, nw, nth, dt);
    }
    // history is kept in the frame of the newest time level
    prev_ = History{shift_x2_mean(std::move(r0.w), out.phase), shift_x2_mean(std::move(r0.theta), out.phase), dt};
    last_dt_ = dt;
    const State& o = out.state;
    if (!o.w.all_finite() || !o.theta.all_finite() || !std::isfinite(o.mean_coeff)) {
      std::ostringstream msg;
      msg << "non-finite state after step to t = " << o.t << " (dt = " << dt << ")";
      throw SolverError(msg.str());
    }
    return out.state;
  }

 private:
  struct Rhs {
    SpectralCoeffs w, theta;
    VelocityField u;
  };
  struct History {
    SpectralCoeffs w, theta;
    double dt;
  };
  struct Update {
    State state;
    double phase = 0.0;  // int c over the step
  };

  static void combine(SpectralCoeffs& a, double sa, const SpectralCoeffs& b, double sb) {
    auto& ad = a.data();
    const auto& bd = b.data();
    for (std::size_t k = 0; k < ad.size(); ++k) ad[k] = sa * ad[k] + sb * bd[k];
  }

  // f(x1, x2 - phase): transport by the mean flow.  The Nyquist column has no
  // derivative on the grid and is left in place, matching d2.
  static SpectralCoeffs shift_x2_mean(SpectralCoeffs c, double phase) {
    if (phase == 0.0) return c;
    const Grid& g = *c.grid();
    const int nyq = g.nx2() / 2;
    for (int k2 = 1; k2 < g.modes2(); ++k2) {
      if (k2 == nyq) continue;
      const cplx ph = std::polar(1.0, -k2 * phase);
      for (int k1 = 0; k1 <= g.nx1(); ++k1) c(k1, k2) *= ph;
    }
    return c;
  }

  double nominal_dt(const VelocityField& u) const {
    double dt = cfg_.step.dt;
    if (cfg_.step.cfl > 0) {
      // the mean flow is integrated exactly and does not enter the limit
      double umax = u.u1.max_abs();
      for (double v : u.u2.values()) umax = std::max(umax, std::abs(v - u.mean_coeff));
      const double h = std::min(cfg_.grid->h1(), cfg_.grid->h2());
      if (umax > 0) dt = std::min(dt, cfg_.step.cfl * h / umax);
    }
    return dt;
  }

  Rhs rhs(const State& s) const {
    const auto wc = transform_forward(s.w);
    const auto tc = transform_forward(s.theta);
    VelocityField u = velocity_from_psi(solve_streamfunction(wc), s.mean_coeff);

    SpectralCoeffs nw = advection_coeffs(u, wc, false);
    nw *= -1.0;
    if (cfg_.buoyancy) nw += differentiate(tc, Axis::x1);
    SpectralCoeffs nth = advection_coeffs(u, tc, false);
    nth *= -1.0;
    // (u.grad) theta integrates to zero for tangential divergence-free u
    nth(0, 0) = 0.0;

    if (forcing_.phi) nw += transform_forward(forcing_.phi(s.t));
    if (forcing_.psi) nth += transform_forward(forcing_.psi(s.t));
    if (control_) {
      ScalarField eta = control_.eval(s.t, s, u);
      if (control_.mean_free) {
        const double m = integrate_domain(eta);
        if (std::abs(m) > 1e-10 * (1.0 + eta.max_abs()))
          throw SolverError("control flagged mean-free has mean " + std::to_string(m) + " at t = " +
                            std::to_string(s.t));
      }
      nth += transform_forward(eta);
    }
    return {std::move(nw), std::move(nth), std::move(u)};
  }

  // Crank-Nicolson in the frame moving with the mean flow:
  //   f1 = [S (f0 (1 - a) + dt n) + dt/2 late] / (1 + a)
  // with S the exact mean-flow shift over the step and `late` the Heun
  // corrector term, already evaluated at t + dt.
  Update implicit_update(const State& s, const SpectralCoeffs& w0, const SpectralCoeffs& th0,
                         const SpectralCoeffs& nw, const SpectralCoeffs& nth, double dt,
                         const Rhs* late = nullptr) const {
    const Grid& g = *cfg_.grid;
    SpectralCoeffs w1(w0.grid(), Parity::odd), th1(th0.grid(), Parity::even);
    for (int k1 = 0; k1 <= g.nx1(); ++k1)
      for (int k2 = 0; k2 < g.modes2(); ++k2) {
        const double lam = laplace_eigenvalue(k1, k2);
        const double aw = 0.5 * dt * cfg_.nu * lam, at = 0.5 * dt * cfg_.tau * lam;
        w1(k1, k2) = (1.0 - aw) * w0(k1, k2) + dt * nw(k1, k2);
        th1(k1, k2) = (1.0 - at) * th0(k1, k2) + dt * nth(k1, k2);
      }
    const double m0 = integrate_domain(th0);
    // the k2 = 0 column is not shifted and has lambda = 0 at k1 = 0
    const double m1 = th1(0, 0).real() + (late ? 0.5 * dt * late->theta(0, 0).real() : 0.0);
    Update out;
    out.state.t = s.t + dt;
    out.state.mean_coeff = s.mean_coeff + 0.5 * dt * (m0 + m1);
    out.phase = dt * s.mean_coeff + 0.25 * dt * dt * (m0 + m1);
    if (control_.mean_flow_primitive) {
      const auto& F = control_.mean_flow_primitive;
      const double f0 = F(s.t), fh = F(s.t + 0.5 * dt), f1 = F(s.t + dt);
      out.state.mean_coeff += f1 - f0;
      out.phase += dt / 6.0 * (4.0 * (fh - f0) + (f1 - f0));
    }
    w1 = shift_x2_mean(std::move(w1), out.phase);
    th1 = shift_x2_mean(std::move(th1), out.phase);
    for (int k1 = 0; k1 <= g.nx1(); ++k1)
      for (int k2 = 0; k2 < g.modes2(); ++k2) {
        const double lam = laplace_eigenvalue(k1, k2);
        const double aw = 0.5 * dt * cfg_.nu * lam, at = 0.5 * dt * cfg_.tau * lam;
        cplx a = w1(k1, k2), b = th1(k1, k2);
        if (late) {
          a += 0.5 * dt * late->w(k1, k2);
          b += 0.5 * dt * late->theta(k1, k2);
        }
        w1(k1, k2) = a / (1.0 + aw);
        th1(k1, k2) = b / (1.0 + at);
      }
    out.state.w = transform_inverse(w1);
    out.state.theta = transform_inverse(th1);
    return out;
  }

  SimConfig cfg_;
  ForcingSpec forcing_;
  ControlSchedule control_;
  std::optional<History> prev_;
  double last_dt_ = 0.0;
};

// Single self-starting step.
inline State step(const SimConfig& cfg, const State& s, const ForcingSpec& forcing,
                  const ControlSchedule& control, double dt) {
  SimConfig c = cfg;
  c.step.dt = dt;
  c.step.cfl = 0.0;
  Integrator integ(c, forcing, control);
  return integ.advance(s, dt);
}

struct Trajectory {
  std::vector<State> snapshots;
  State final_state;
  std::size_t steps = 0;
};

using StepObserver = std::function<void(const State&)>;

// Integrates to t_end, landing exactly on each requested snapshot time.
// Steps are equalised inside each segment so the AB2 step ratio stays sane.
inline Trajectory run(const SimConfig& cfg, const State& s0, double t_end,
                      const ForcingSpec& forcing = {}, const ControlSchedule& control = {},
                      std::vector<double> snapshot_times = {}, const StepObserver& observer = {}) {
  cfg.validate();
  if (s0.w.parity() != Parity::odd || s0.theta.parity() != Parity::even)
    throw std::invalid_argument("run: state must hold odd w and even theta");
  if (t_end < s0.t) throw std::invalid_argument("run: t_end precedes the initial time");
  std::sort(snapshot_times.begin(), snapshot_times.end());
  Integrator integ(cfg, forcing, control);
  Trajectory tr;
  State s = s0;
  if (observer) observer(s);
  std::vector<double> stops;
  for (double t : snapshot_times)
    if (t >= s0.t && t <= t_end) stops.push_back(t);
  stops.push_back(t_end);
  auto requested = [&](double t) {
    return snapshot_times.empty() ? t == t_end
                                  : std::binary_search(snapshot_times.begin(), snapshot_times.end(), t);
  };
  std::size_t next = 0;
  const double tol = 1e-12 * std::max(1.0, std::abs(t_end));
  for (;;) {
    while (next < stops.size() && stops[next] <= s.t) {
      if (requested(stops[next]) && (tr.snapshots.empty() || tr.snapshots.back().t != s.t))
        tr.snapshots.push_back(s);
      ++next;
    }
    if (next == stops.size()) break;
    const double remaining = stops[next] - s.t;
    const double n = std::ceil(remaining / cfg.step.dt - 1e-9);
    s = integ.advance(s, remaining / std::max(1.0, n));
    ++tr.steps;
    if (std::abs(s.t - stops[next]) < tol) s.t = stops[next];
    if (observer) observer(s);
  }
  tr.final_state = s;
  return tr;
}

}  // namespace bqc
