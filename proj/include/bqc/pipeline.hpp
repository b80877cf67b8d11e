#pragma once

// Global strategy: free smoothing run, temperature steered to -xi / gamma,
// free run of length gamma that turns that temperature into the vorticity
// correction, final temperature correction, then a short uncontrolled tail.

#include <chrono>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bqc/temperature_steering.hpp"
#include "bqc/vorticity_steering.hpp"

namespace bqc {

struct PipelineConfig {
  SimConfig sim;
  CutoffGeometry strip;
  BumpKind bump = BumpKind::smooth;
  double eps = 0.1;
  double T = 0.0;               // horizon; 0 picks T so that T1 = t1_fraction * T with the given tail
  double t1_fraction = 0.2;
  double trailing = 0.005;      // tail length [T4, T] when T is picked automatically
  std::vector<double> gamma_schedule = {0.2, 0.1, 0.05, 0.025};
  int vorticity_steps_per_delta = 400;
  double beta = 0.0;            // stage 2 vorticity tolerance, 0 means eps / 10
  double kappa = 0.0;           // stage 2 temperature tolerance, 0 means eps / 10
  double delta_special = 1e-6;  // steering time to the special temperature
  double delta_final = 1e-6;    // steering time of the final correction
  // steer.eps is replaced per stage so that the target smoothing error is a
  // fixed share of that stage's temperature budget
  TemperatureSteeringOptions steer = [] {
    TemperatureSteeringOptions o;
    o.dsigma = 4e-5;
    return o;
  }();
  double smoothing_share = 0.25;

  double beta_tol() const { return beta > 0 ? beta : eps / 10; }
  double kappa_tol() const { return kappa > 0 ? kappa : eps / 10; }
  void validate() const {
    std::ostringstream msg;
    if (!(eps > 0)) msg << "eps must be positive";
    else if (T < 0) msg << "T must be positive (or 0 for automatic)";
    else if (!(t1_fraction > 0 && t1_fraction < 1)) msg << "t1_fraction must lie in (0, 1)";
    else if (gamma_schedule.empty()) msg << "gamma schedule is empty";
    else if (!(delta_special > 0 && delta_special < 1 && delta_final > 0 && delta_final < 1))
      msg << "steering times must lie in (0, 1)";
    else if (!(beta_tol() + kappa_tol() < eps / 2)) msg << "beta + kappa must stay below eps / 2";
    else if (!(trailing >= 0)) msg << "trailing window must be non-negative";
    else if (!(smoothing_share > 0 && smoothing_share < 1)) msg << "smoothing_share must lie in (0, 1)";
    for (double d : gamma_schedule)
      if (!(d > 0 && d < 1)) msg << "gamma schedule entries must lie in (0, 1)";
    if (!msg.str().empty()) throw std::invalid_argument("pipeline config: " + msg.str());
  }
};

struct StageRow {
  std::string stage;
  double t_start = 0.0, t_end = 0.0;
  double w_error = 0.0;       // stage-specific vorticity metric
  double theta_error = 0.0;   // stage-specific temperature metric
  double c = 0.0;             // mean flow at t_end
  double delta = 0.0;         // delta or gamma used, 0 for free runs
  double value = 0.0;         // quantity compared with the budget
  double budget = 0.0;
  bool ok = true;
  double wall_seconds = 0.0;
};

struct SweepRow {
  double delta = 0.0, error = 0.0, q = 0.0, r = 0.0;
};

struct PipelineReport {
  std::vector<StageRow> stages;
  std::vector<SweepRow> gamma_sweep;
  double T1 = 0, T2 = 0, T3 = 0, T4 = 0, T = 0;
  double gamma = 0.0;
  double xi_error = 0.0;
  double final_error = 0.0;      // ||w(T) - wT||_1 + ||theta(T) - thetaT||_2 + |c(T)|
  double error_at_T4 = 0.0;
  double trailing_drift = 0.0;   // max over [T4, T] of the same sum measured against the state at T4
  double velocity_error = 0.0;   // ||u(T) - uT||_2
  double control_off_strip = 0.0;
  bool stage3_uncontrolled = true;
  State final_state;
  bool ok = false;
};

class PipelineError : public std::runtime_error {
 public:
  PipelineError(const std::string& what, PipelineReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const PipelineReport& report() const { return report_; }

 private:
  PipelineReport report_;
};

namespace detail {

inline double state_gap(const State& s, const ScalarField& w, const ScalarField& theta, double c) {
  return sobolev_norm(s.w - w, 1) + sobolev_norm(s.theta - theta, 2) + std::abs(s.mean_coeff - c);
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace detail

inline PipelineReport run_pipeline(const State& s0, const ScalarField& wT, const ScalarField& thetaT,
                                   const ForcingSpec& forcing, const PipelineConfig& cfg) {
  cfg.validate();
  const GridPtr& g = s0.w.grid();
  const Cutoff chi(cfg.strip);
  const DriftProfile drift = DriftProfile::for_cutoff(chi, cfg.bump);
  const double eps = cfg.eps;
  PipelineReport rep;
  detail::Stopwatch clock;

  auto fail = [&](const std::string& why) {
    rep.ok = false;
    throw PipelineError("pipeline: " + why, rep);
  };
  auto check = [&](StageRow row) {
    row.ok = row.value < row.budget;
    row.wall_seconds = clock.lap();
    rep.stages.push_back(row);
    if (!row.ok) {
      std::ostringstream m;
      m << "stage " << row.stage << " misses its budget: " << row.value << " >= " << row.budget;
      fail(m.str());
    }
  };

  const double stages_after_gamma = cfg.delta_special + cfg.delta_final;
  auto horizon = [&](double gamma) {
    return cfg.T > 0 ? cfg.T : (gamma + stages_after_gamma + cfg.trailing) / (1.0 - cfg.t1_fraction);
  };

  // Stage 1 and the gamma sweep.  With an automatic horizon, T1 depends on
  // gamma, so the sweep is repeated until the assumed gamma is the one found.
  std::vector<double> sched = cfg.gamma_schedule;
  std::sort(sched.begin(), sched.end());
  double assumed = sched.front();
  State s1;
  XiProfile xi;
  for (std::size_t attempt = 0; attempt <= sched.size(); ++attempt) {
    rep.T = horizon(assumed);
    rep.T1 = s0.t + cfg.t1_fraction * rep.T;
    s1 = run(cfg.sim, s0, rep.T1, forcing).final_state;
    try {
      xi = build_xi(s1.w, wT, eps / 3);
    } catch (const std::runtime_error& e) {
      rep.stages.push_back({"smoothing", s0.t, rep.T1, sobolev_norm(s1.w - wT, 1), 0, s1.mean_coeff, 0,
                            std::numeric_limits<double>::infinity(), eps / 3, false, clock.lap()});
      fail(e.what());
    }
    // proxy: steering from (w(T1), 0) with the wanted temperature -xi / gamma
    State proxy{s1.w, ScalarField(g, Parity::even), 0.0, s1.t};
    rep.gamma_sweep.clear();
    double found = 0.0;
    for (auto it = sched.rbegin(); it != sched.rend(); ++it) {
      auto r = steer_vorticity(cfg.sim, proxy, xi.xi, *it, forcing, cfg.vorticity_steps_per_delta);
      rep.gamma_sweep.push_back({*it, r.error, r.rem.q, r.rem.r});
      if (r.error < eps / 2) found = *it;
    }
    if (found == 0.0) {
      rep.stages.push_back({"smoothing", s0.t, rep.T1, sobolev_norm(s1.w - wT, 1), 0, s1.mean_coeff, 0,
                            xi.error, eps / 3, true, clock.lap()});
      fail("no gamma in the schedule meets the eps / 2 vorticity budget");
    }
    if (cfg.T > 0 || found == assumed) {
      assumed = found;
      break;
    }
    assumed = found;
  }
  rep.gamma = assumed;
  rep.xi_error = xi.error;
  check({"smoothing", s0.t, rep.T1, sobolev_norm(s1.w - wT, 1), 0, s1.mean_coeff, 0, xi.error, eps / 3});
  const double gamma = rep.gamma;
  rep.T = horizon(gamma);

  auto steer_opts = [&](const ScalarField& from, const ScalarField& to, double budget) {
    TemperatureSteeringOptions o = cfg.steer;
    const double n3 = sobolev_norm(to - from, 3);
    o.eps = n3 > 0 ? cfg.smoothing_share * budget / n3 : 1.0;
    return o;
  };

  // Stage 2: reach the special temperature -xi / gamma
  ScalarField special = (-1.0 / gamma) * xi.xi;
  auto st2 = steer_temperature(cfg.sim, s1, special, chi, drift, cfg.delta_special, forcing,
                               steer_opts(s1.theta, special, cfg.kappa_tol()));
  const State s2 = st2.final_state;
  rep.T2 = s2.t;
  rep.control_off_strip = st2.off_strip;
  {
    StageRow row{"special_temperature", rep.T1, rep.T2, sobolev_norm(s2.w - s1.w, 1),
                 sobolev_norm(s2.theta - special, 2), s2.mean_coeff, cfg.delta_special};
    row.value = std::max(row.w_error / cfg.beta_tol(), row.theta_error / cfg.kappa_tol());
    row.budget = 1.0;
    check(row);
  }

  // Stage 3: free evolution for gamma, strictly no control
  const State s3 = run(cfg.sim, s2, rep.T2 + gamma, forcing).final_state;
  rep.T3 = s3.t;
  {
    StageRow row{"free_vorticity", rep.T2, rep.T3, sobolev_norm(s3.w - wT, 1), 0.0, s3.mean_coeff, gamma};
    row.value = row.w_error;
    row.budget = eps / 2;
    check(row);
  }

  // Stage 4: temperature correction
  // what stage 3 left of the 2 eps / 3 budget goes to the temperature
  const double theta_budget = std::max(2 * eps / 3 - sobolev_norm(s3.w - wT, 1), eps / 6);
  auto st4 = steer_temperature(cfg.sim, s3, thetaT, chi, drift, cfg.delta_final, forcing,
                               steer_opts(s3.theta, thetaT, theta_budget));
  const State s4 = st4.final_state;
  rep.T4 = s4.t;
  rep.control_off_strip = std::max(rep.control_off_strip, st4.off_strip);
  rep.error_at_T4 = detail::state_gap(s4, wT, thetaT, 0.0);
  {
    StageRow row{"temperature_correction", rep.T3, rep.T4, sobolev_norm(s4.w - wT, 1),
                 sobolev_norm(s4.theta - thetaT, 2), s4.mean_coeff, cfg.delta_final};
    row.value = rep.error_at_T4;
    row.budget = 2 * eps / 3;
    check(row);
  }

  // Trailing uncontrolled window
  if (rep.T < rep.T4) {
    std::ostringstream m;
    m << "horizon T = " << rep.T << " ends before the controlled stages (T4 = " << rep.T4 << ")";
    fail(m.str());
  }
  double drift_max = 0.0;
  const State sT = run(cfg.sim, s4, s0.t + rep.T, forcing, {}, {}, [&](const State& s) {
                     drift_max = std::max(drift_max, detail::state_gap(s, s4.w, s4.theta, s4.mean_coeff));
                   }).final_state;
  rep.trailing_drift = drift_max;
  rep.final_state = sT;
  rep.final_error = detail::state_gap(sT, wT, thetaT, 0.0);
  {
    const auto u = velocity_from_vorticity(sT.w, sT.mean_coeff);
    const auto uT = velocity_from_vorticity(wT, 0.0);
    rep.velocity_error = std::hypot(sobolev_norm(u.u1 - uT.u1, 2), sobolev_norm(u.u2 - uT.u2, 2));
  }
  {
    StageRow row{"trailing", rep.T4, sT.t, sobolev_norm(sT.w - wT, 1), sobolev_norm(sT.theta - thetaT, 2),
                 sT.mean_coeff, 0.0};
    row.value = drift_max;
    row.budget = eps / 3;
    check(row);
  }
  {
    StageRow row{"final", s0.t, sT.t, sobolev_norm(sT.w - wT, 1), sobolev_norm(sT.theta - thetaT, 2),
                 sT.mean_coeff, gamma};
    row.value = rep.final_error;
    row.budget = eps;
    check(row);
  }
  rep.ok = true;
  return rep;
}

// 17 significant digits, locale independent.
inline std::string csv_number(double v) {
  std::ostringstream o;
  o.imbue(std::locale::classic());
  o << std::setprecision(17) << v;
  return o.str();
}

// Wall-clock times change between reruns, so they can be left out to keep
// the CSV byte-identical.
inline void stage_report(const PipelineReport& rep, std::ostream& out, bool wall_clock = true) {
  out << "stage,t_start,t_end,w_error,theta_error,c,delta,value,budget,ok" << (wall_clock ? ",wall_seconds" : "")
      << '\n';
  for (const auto& r : rep.stages) {
    out << r.stage << ',' << csv_number(r.t_start) << ',' << csv_number(r.t_end) << ',' << csv_number(r.w_error)
        << ',' << csv_number(r.theta_error) << ',' << csv_number(r.c) << ',' << csv_number(r.delta) << ','
        << csv_number(r.value) << ',' << csv_number(r.budget) << ',' << (r.ok ? 1 : 0);
    if (wall_clock) out << ',' << csv_number(r.wall_seconds);
    out << '\n';
  }
}

}  // namespace bqc
