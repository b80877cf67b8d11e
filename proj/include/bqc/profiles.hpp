#pragma once

// One-dimensional smooth profiles: the exp(-1/y) smooth step and the unit
// bumps that shape the drift windows.

#include <stdexcept>
#include <string>

#include "bqc/jet.hpp"

namespace bqc {

inline constexpr int kProfileOrder = 5;
using ProfileJet = Jet<kProfileOrder>;

// S(y) = e^{-1/y} / (e^{-1/y} + e^{-1/(1-y)}) on (0, 1), 0 below, 1 above.
// Returns S and its derivatives at y.  Within 1/700 of the ends the
// exponentials underflow and S is flat to double precision.
inline ProfileJet smooth_step_jet(double y) {
  constexpr double flat = 1.0 / 700.0;
  if (y <= flat) return ProfileJet::constant(0.0);
  if (y >= 1.0 - flat) return ProfileJet::constant(1.0);
  const ProfileJet v = ProfileJet::variable(y);
  const ProfileJet f = exp(-(1.0 / v));
  const ProfileJet g = exp(-(1.0 / (1.0 - v)));
  return f / (f + g);
}

inline double smooth_step(double y) { return smooth_step_jet(y).value(); }

enum class BumpKind { smooth, poly2, poly3 };

inline BumpKind parse_bump_kind(const std::string& s) {
  if (s == "smooth") return BumpKind::smooth;
  if (s == "poly2") return BumpKind::poly2;
  if (s == "poly3") return BumpKind::poly3;
  throw std::invalid_argument("unknown bump shape '" + s + "' (expected smooth, poly2 or poly3)");
}

inline const char* to_string(BumpKind k) {
  switch (k) {
    case BumpKind::smooth: return "smooth";
    case BumpKind::poly2: return "poly2";
    case BumpKind::poly3: return "poly3";
  }
  return "?";
}

// Primitive I of a unit-mass bump on [0, 1]: I(0) = 0, I(1) = 1, I' is the
// bump.  poly2 is 30 y^2 (1-y)^2 (C^1 at the ends), poly3 is 140 y^3 (1-y)^3
// (C^2), smooth is the derivative of S (C^infinity).
inline ProfileJet bump_primitive(BumpKind kind, double y) {
  if (kind == BumpKind::smooth) return smooth_step_jet(y);
  if (y <= 0.0) return ProfileJet::constant(0.0);
  if (y >= 1.0) return ProfileJet::constant(1.0);
  const ProfileJet v = ProfileJet::variable(y);
  if (kind == BumpKind::poly2) {
    // 30 (y^3/3 - y^4/2 + y^5/5)
    const ProfileJet v3 = v * v * v;
    return v3 * (10.0 + v * (-15.0 + 6.0 * v));
  }
  // 140 (y^4/4 - 3 y^5/5 + y^6/2 - y^7/7)
  const ProfileJet v4 = v * v * v * v;
  return v4 * (35.0 + v * (-84.0 + v * (70.0 - 20.0 * v)));
}

}  // namespace bqc
