#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace bqc {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre on [-1, 1] by Newton iteration on P_n.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  QuadratureRule q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[i] = -x;
    q.nodes[n - 1 - i] = x;
    q.weights[i] = w;
    q.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) q.nodes[n / 2] = 0.0;
  return q;
}

// Composite rule over the sorted breakpoints in [a, b], each panel split
// into `sub` equal pieces with an n-point Gauss rule on each.
inline QuadratureRule composite_gauss(double a, double b, std::vector<double> breaks,
                                      int n, int sub = 1) {
  QuadratureRule out;
  if (!(b > a)) return out;
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> pts;
  for (double x : breaks)
    if (x >= a && x <= b && (pts.empty() || x - pts.back() > 1e-15 * (1.0 + std::abs(x))))
      pts.push_back(x);
  const QuadratureRule g = gauss_legendre(n);
  for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
    const double h = (pts[p + 1] - pts[p]) / sub;
    for (int s = 0; s < sub; ++s) {
      const double lo = pts[p] + s * h;
      for (int i = 0; i < n; ++i) {
        out.nodes.push_back(lo + 0.5 * h * (g.nodes[i] + 1.0));
        out.weights.push_back(0.5 * h * g.weights[i]);
      }
    }
  }
  return out;
}

}  // namespace bqc
