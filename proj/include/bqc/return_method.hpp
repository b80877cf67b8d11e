#pragma once

// Return-method reference flow: a time-only vertical drift ybar(t) e2 on
// [0, 1] that moves each of K overlapping bands of the channel through the
// control strip, parks it there for one slot, and brings it back.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "bqc/profiles.hpp"
#include "bqc/quadrature.hpp"
#include "bqc/spectral.hpp"

namespace bqc {

// Equidistant nodes t0c < t1a < t1b < t1c < ... < tKc < 1 with spacing
// tbar = 1 / (3K + 2).
struct PartitionTimes {
  int K = 0;
  double tbar = 0.0;
  double t0c = 0.0;
  std::vector<double> ta, tb, tc;  // index i - 1 for window i

  std::vector<double> nodes() const {
    std::vector<double> n{t0c};
    for (int i = 0; i < K; ++i) {
      n.push_back(ta[i]);
      n.push_back(tb[i]);
      n.push_back(tc[i]);
    }
    return n;
  }
};

inline PartitionTimes build_partition(int K) {
  if (K < 1) throw std::invalid_argument("build_partition: K must be >= 1");
  PartitionTimes p;
  p.K = K;
  p.tbar = 1.0 / (3.0 * K + 2.0);
  p.t0c = p.tbar;
  for (int i = 1; i <= K; ++i) {
    p.ta.push_back((3 * i - 1) * p.tbar);
    p.tb.push_back(3 * i * p.tbar);
    p.tc.push_back((3 * i + 1) * p.tbar);
  }
  return p;
}

struct CutoffGeometry {
  double a = 0.0, b = 2 * pi;  // control strip (a, b)
  double H1 = 0.0, H2 = 0.0;   // band with [H1, H2] inside (a, b)
  int K = 0;
};

inline double band_width(int K) { return 8.0 * pi / (3.0 * K); }

// Smallest K with 8 pi / (3K) < (H2 - H1) / 3.
inline int minimal_K(double H1, double H2) {
  if (!(H2 > H1)) throw std::invalid_argument("minimal_K: need H2 > H1");
  int K = int(std::floor(8.0 * pi / (H2 - H1))) + 1;
  while (K > 1 && band_width(K - 1) < (H2 - H1) / 3.0) --K;
  return K;
}

class Cutoff {
 public:
  explicit Cutoff(CutoffGeometry geo) : geo_(geo) {
    std::ostringstream msg;
    if (!(geo.a >= 0 && geo.a < geo.b && geo.b < 2 * pi + 1e-15))
      msg << "control strip needs 0 <= a < b <= 2 pi, got (" << geo.a << ", " << geo.b << ")";
    else if (!(geo.a <= geo.H1 && geo.H1 < geo.H2 && geo.H2 <= geo.b))
      msg << "need a <= H1 < H2 <= b, got H1 = " << geo.H1 << ", H2 = " << geo.H2;
    else if (geo.K < 1)
      msg << "K must be >= 1";
    else if (!(band_width(geo.K) < (geo.H2 - geo.H1) / 3.0))
      msg << "band width l_K = 8 pi / (3K) = " << band_width(geo.K)
          << " must be below (H2 - H1) / 3 = " << (geo.H2 - geo.H1) / 3.0
          << " (grouped reading of the width rule; the ungrouped H2 - H1/3 is not used); "
          << "smallest admissible K is " << minimal_K(geo.H1, geo.H2);
    if (!msg.str().empty()) throw std::invalid_argument("cutoff geometry: " + msg.str());
    l_ = band_width(geo.K);
  }

  const CutoffGeometry& geometry() const { return geo_; }
  int K() const { return geo_.K; }
  double band() const { return l_; }
  // Lower edge of the reference rectangle O = (H1 + l, H1 + 2l).
  double origin() const { return geo_.H1 + l_; }

  // Profile on (0, l): S-ramp on [0, l/4], 1 on [l/4, 3l/4], mirrored ramp.
  ProfileJet profile_jet(double s) const {
    const double q = l_ / 4.0;
    if (s <= 0.0 || s >= l_) return ProfileJet::constant(0.0);
    if (s < q) return scaled(smooth_step_jet(s / q), 1.0 / q);
    if (s <= 3 * q) return ProfileJet::constant(1.0);
    ProfileJet r = scaled(smooth_step_jet((s - 3 * q) / q), 1.0 / q);
    r *= -1.0;
    r.c[0] += 1.0;
    return r;
  }
  double profile(double s) const { return profile_jet(s).value(); }

  ProfileJet chi_jet(double x2) const { return profile_jet(wrap(x2 - origin())); }
  double chi(double x2) const { return chi_jet(x2).value(); }
  double chi_derivative(double x2, int k) const { return chi_jet(x2).derivative(k); }

  // Exact normalised integral: 3l/4 over a 2 pi period, i.e. 1/K.
  double integral() const { return 1.0 / geo_.K; }

  // chi sampled at (x1_i, x2_j + shift) as an even field.
  ScalarField sample(const GridPtr& g, double shift = 0.0) const {
    ScalarField f(g, Parity::even);
    std::vector<double> row(g->nx2());
    for (int j = 0; j < g->nx2(); ++j) row[j] = chi(g->x2(j) + shift);
    for (int i = 0; i < g->nx1(); ++i)
      for (int j = 0; j < g->nx2(); ++j) f(i, j) = row[j];
    return f;
  }

  // Translation by A_i maps band O_i = (3(i-1)l/4, 3(i-1)l/4 + l) onto O;
  // minimal representative in (-pi, pi].
  double translation(int i) const {
    double A = origin() - 3.0 * (i - 1) * l_ / 4.0;
    A = std::remainder(A, 2 * pi);
    if (A <= -pi) A += 2 * pi;
    return A;
  }
  std::vector<double> translations() const {
    std::vector<double> A;
    for (int i = 1; i <= geo_.K; ++i) A.push_back(translation(i));
    return A;
  }

  static double wrap(double x) {
    double r = std::fmod(x, 2 * pi);
    if (r < 0) r += 2 * pi;
    return r;
  }

 private:
  static ProfileJet scaled(ProfileJet j, double rate) {
    double f = 1.0;
    for (int k = 1; k <= kProfileOrder; ++k) {
      f *= rate;
      j.c[k] *= f;
    }
    return j;
  }

  CutoffGeometry geo_;
  double l_ = 0.0;
};

// True when every translation A_i is an even multiple of the x2 spacing
// 2 pi / n2.  The parking shifts then map grid points to grid points (the
// Nyquist column, which has no derivative, is unaffected), so the discrete
// transport reproduces the partition of unity exactly.
inline bool translations_on_grid(const Cutoff& chi, int n2, double tol = 1e-9) {
  const double q = 4.0 * pi / n2;
  for (double A : chi.translations()) {
    const double r = A / q;
    if (std::abs(r - std::round(r)) > tol) return false;
  }
  return true;
}

// Smallest H1' >= H1 for which translations_on_grid holds; needs 2K | n2.
inline double grid_aligned_H1(double H1, int K, int n2) {
  if (n2 % (2 * K) != 0)
    throw std::invalid_argument("grid_aligned_H1: nx2 must be divisible by 2K");
  const double q = 4.0 * pi / n2, l = band_width(K);
  return std::ceil((H1 + l) / q - 1e-12) * q - l;
}

// Vertical drift built from K windows; window i starts at (3i - 2) tbar with
// a bump of mass A_i, a rest slot and the reversed bump.
class DriftProfile {
 public:
  DriftProfile(PartitionTimes part, std::vector<double> amplitudes, BumpKind bump = BumpKind::smooth,
               double time_scale = 1.0)
      : part_(std::move(part)), A_(std::move(amplitudes)), bump_(bump), scale_(time_scale) {
    if (int(A_.size()) != part_.K)
      throw std::invalid_argument("DriftProfile: need one amplitude per window");
    if (!(scale_ > 0)) throw std::invalid_argument("DriftProfile: time scale must be positive");
  }

  static DriftProfile for_cutoff(const Cutoff& chi, BumpKind bump = BumpKind::smooth) {
    return DriftProfile(build_partition(chi.K()), chi.translations(), bump);
  }

  // The same drift run on [0, delta]: ybar_delta(t) = ybar(t / delta) / delta.
  DriftProfile rescaled(double delta) const { return DriftProfile(part_, A_, bump_, delta); }

  const PartitionTimes& partition() const { return part_; }
  const std::vector<double>& amplitudes() const { return A_; }
  BumpKind bump() const { return bump_; }
  double time_scale() const { return scale_; }

  // k-th time derivative of ybar_2, k = 0..kProfileOrder-1.
  double velocity(double t, int k = 0) const {
    const Seg s = locate(t / scale_);
    if (s.window < 0 || s.phase == Phase::rest) return 0.0;
    const ProfileJet I = bump_primitive(bump_, s.y);
    const double tb = part_.tbar;
    double v = A_[s.window] * I.derivative(k + 1) / std::pow(tb, k + 1);
    if (s.phase == Phase::back) v = -v;
    return v / std::pow(scale_, k + 1);
  }

  // Displacement P(t) = int_0^t ybar_2.
  double displacement(double t) const {
    const Seg s = locate(t / scale_);
    if (s.window < 0) return 0.0;
    const double A = A_[s.window];
    switch (s.phase) {
      case Phase::out: return A * bump_primitive(bump_, s.y).value();
      case Phase::rest: return A;
      case Phase::back: return A * (1.0 - bump_primitive(bump_, s.y).value());
    }
    return 0.0;
  }

  // B(s, t) = int_s^t ybar_2.
  double B(double s, double t) const { return displacement(t) - displacement(s); }

  // Index of the rest window containing t, or -1.
  int rest_window(double t) const {
    const Seg s = locate(t / scale_);
    return s.window >= 0 && s.phase == Phase::rest ? s.window : -1;
  }

  // Breakpoints where the drift changes regime, on the scaled clock.
  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (double n : part_.nodes()) b.push_back(n * scale_);
    b.push_back(scale_);
    return b;
  }

 private:
  enum class Phase { out, rest, back };
  struct Seg {
    int window = -1;
    Phase phase = Phase::rest;
    double y = 0.0;
  };

  Seg locate(double t) const {
    const double u = t / part_.tbar - 1.0;
    Seg s;
    if (u < 0.0) return s;
    int i = int(std::floor(u / 3.0));
    if (i >= part_.K) return s;
    const double ph = u - 3.0 * i;
    s.window = i;
    if (ph < 1.0) {
      s.phase = Phase::out;
      s.y = ph;
    } else if (ph < 2.0) {
      s.phase = Phase::rest;
    } else {
      s.phase = Phase::back;
      s.y = ph - 2.0;
    }
    return s;
  }

  PartitionTimes part_;
  std::vector<double> A_;
  BumpKind bump_;
  double scale_;
};

struct Point {
  double x1, x2;
};

// Y(x, s, t): position at time t of the particle that sits at x at time s.
inline Point flow_map(const DriftProfile& d, Point x, double s, double t) {
  return {x.x1, Cutoff::wrap(x.x2 + d.B(s, t))};
}

// Inviscid reference trajectory (u, theta, p, eta) carried by the drift:
// u = ybar, theta = ybar' chi / int chi, eta = (ybar'' chi + ybar ybar' chi') / int chi.
class ReferenceTrajectory {
 public:
  ReferenceTrajectory(DriftProfile drift, Cutoff chi) : drift_(std::move(drift)), chi_(std::move(chi)) {}

  const DriftProfile& drift() const { return drift_; }
  const Cutoff& cutoff() const { return chi_; }

  double velocity(double t) const { return drift_.velocity(t); }
  double theta(double x2, double t) const {
    return drift_.velocity(t, 1) * chi_.chi(x2) / chi_.integral();
  }
  double eta(double x2, double t) const {
    const ProfileJet c = chi_.chi_jet(x2);
    return (drift_.velocity(t, 2) * c.value() + drift_.velocity(t) * drift_.velocity(t, 1) * c.derivative(1)) /
           chi_.integral();
  }
  // Pressure normalised by p(x1, 0) = 0; grad p = (theta - ybar') e2.
  double pressure(double x2, double t) const {
    const double L = Cutoff::wrap(x2);
    std::vector<double> br;
    for (double f : {0.0, 0.25, 0.75, 1.0}) br.push_back(Cutoff::wrap(chi_.origin() + f * chi_.band()));
    const QuadratureRule q = composite_gauss(0.0, L, br, 12, 2);
    double s = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) s += q.weights[k] * chi_.chi(q.nodes[k]);
    return drift_.velocity(t, 1) * (s / chi_.integral() - L);
  }

  ScalarField theta_field(const GridPtr& g, double t) const {
    ScalarField f = chi_.sample(g);
    f *= drift_.velocity(t, 1) / chi_.integral();
    return f;
  }

  // Max over the sampled times of the discrete L2 (over n2 points in x2)
  // residuals of the momentum and temperature equations.  Time derivatives
  // are centred differences of step ht; x2 derivatives of chi are exact, so
  // the residual isolates the O(ht^2) consistency error.
  double residual_inviscid(const std::vector<double>& times, double ht, int n2 = 256) const {
    double worst = 0.0;
    for (double t : times) {
      const double dyt = (drift_.velocity(t + ht) - drift_.velocity(t - ht)) / (2 * ht);
      double mom = 0.0, heat = 0.0;
      for (int j = 0; j < n2; ++j) {
        const double x2 = 2 * pi * j / n2;
        const ProfileJet c = chi_.chi_jet(x2);
        // x2 momentum: d_t u2 + (u.grad) u2 + d2 p - theta, with u2 = ybar(t)
        const double grad_p = theta(x2, t) - drift_.velocity(t, 1);
        const double rm = dyt + grad_p - theta(x2, t);
        const double dth = (theta(x2, t + ht) - theta(x2, t - ht)) / (2 * ht);
        const double rh = dth + velocity(t) * drift_.velocity(t, 1) * c.derivative(1) / chi_.integral() -
                          eta(x2, t);
        mom += rm * rm;
        heat += rh * rh;
      }
      worst = std::max({worst, std::sqrt(mom / n2), std::sqrt(heat / n2)});
    }
    return worst;
  }

 private:
  DriftProfile drift_;
  Cutoff chi_;
};

}  // namespace bqc
