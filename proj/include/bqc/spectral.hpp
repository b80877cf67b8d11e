#pragma once

// Mixed sine/cosine x Fourier representation of fields on the channel
// (-1, 1) x T.  With s = (x1 + 1) / 2 an odd-parity field is a sine series
// sum_{m=1..N} b_m sin(m pi s) (Dirichlet walls), an even-parity field is a
// cosine series sum_{k=0..N-1} a_k cos(k pi s) (Neumann walls).  Along x2
// the usual half spectrum of a real signal is kept:
//   f = c_0 + 2 Re sum_{0<k<n2/2} c_k e^{i k x2} + c_{n2/2} cos(n2/2 x2).
// Coefficients are stored by mode number, (nx1 + 1) rows by (nx2/2 + 1)
// columns; row 0 is unused for sine series and row nx1 for cosine series.
//
// Physical samples sit on the cell-centred grid x1_i = -1 + 2(i + 1/2)/nx1,
// x2_j = 2 pi j / nx2, stored row-major with x1 as the slow index.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bqc {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

enum class Parity : std::uint8_t { odd = 0, even = 1 };
enum class Axis { x1, x2 };

inline Parity flip(Parity p) { return p == Parity::odd ? Parity::even : Parity::odd; }
inline Parity product_parity(Parity a, Parity b) {
  return a == b ? Parity::even : Parity::odd;
}
inline const char* to_string(Parity p) { return p == Parity::odd ? "odd" : "even"; }

class SpectralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlans {
  fftw_plan dct_fwd = nullptr, dst_fwd = nullptr, dct_inv = nullptr, dst_inv = nullptr;
  fftw_plan r2c = nullptr, c2r = nullptr;

  FftwPlans(int n1, int n2) {
    std::lock_guard lock(fftw_planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    double* a = fftw_alloc_real(std::size_t(n1) * n2);
    double* b = fftw_alloc_real(std::size_t(n1) * n2);
    fftw_complex* z = fftw_alloc_complex(std::size_t(n1) * (n2 / 2 + 1));
    int n[1] = {n1};
    auto many = [&](fftw_r2r_kind kind) {
      return fftw_plan_many_r2r(1, n, n2, a, nullptr, n2, 1, b, nullptr, n2, 1, &kind,
                                flags);
    };
    dct_fwd = many(FFTW_REDFT10);
    dst_fwd = many(FFTW_RODFT10);
    dct_inv = many(FFTW_REDFT01);
    dst_inv = many(FFTW_RODFT01);
    int m[1] = {n2};
    const int mc = n2 / 2 + 1;
    r2c = fftw_plan_many_dft_r2c(1, m, n1, a, nullptr, 1, n2, z, nullptr, 1, mc, flags);
    c2r = fftw_plan_many_dft_c2r(1, m, n1, z, nullptr, 1, mc, a, nullptr, 1, n2, flags);
    fftw_free(a);
    fftw_free(b);
    fftw_free(z);
    if (!dct_fwd || !dst_fwd || !dct_inv || !dst_inv || !r2c || !c2r)
      throw SpectralError("FFTW planning failed");
  }
  ~FftwPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    for (fftw_plan p : {dct_fwd, dst_fwd, dct_inv, dst_inv, r2c, c2r})
      if (p) fftw_destroy_plan(p);
  }
  FftwPlans(const FftwPlans&) = delete;
  FftwPlans& operator=(const FftwPlans&) = delete;
};

}  // namespace detail

class Grid {
 public:
  static std::shared_ptr<const Grid> make(int nx1, int nx2) {
    return std::shared_ptr<const Grid>(new Grid(nx1, nx2));
  }

  int nx1() const { return n1_; }
  int nx2() const { return n2_; }
  int modes2() const { return n2_ / 2 + 1; }
  int rows() const { return n1_ + 1; }
  std::size_t size() const { return std::size_t(n1_) * n2_; }
  std::size_t spectral_size() const { return std::size_t(rows()) * modes2(); }

  double x1(int i) const { return -1.0 + 2.0 * (i + 0.5) / n1_; }
  double x2(int j) const { return 2.0 * pi * j / n2_; }
  double h1() const { return 2.0 / n1_; }
  double h2() const { return 2.0 * pi / n2_; }

  // 2/3-rule cutoffs applied to nonlinear products.
  int dealias_k1() const { return (2 * n1_ - 1) / 3; }
  int dealias_k2() const { return (n2_ - 1) / 3; }

  // Weights w_i over x1 such that the normalised integral of a field of the
  // given parity is sum_i w_i * mean_j f(i, j).  Exact for the interpolant.
  const std::vector<double>& x1_weights(Parity p) const {
    return p == Parity::odd ? w_odd_ : w_even_;
  }

  const detail::FftwPlans& plans() const { return *plans_; }

 private:
  Grid(int nx1, int nx2) : n1_(nx1), n2_(nx2) {
    if (nx1 < 4 || nx2 < 4 || nx2 % 2 != 0)
      throw std::invalid_argument("Grid: need nx1 >= 4 and even nx2 >= 4, got " +
                                  std::to_string(nx1) + "x" + std::to_string(nx2));
    plans_ = std::make_unique<detail::FftwPlans>(nx1, nx2);
    w_even_.assign(nx1, 1.0 / nx1);
    w_odd_.assign(nx1, 0.0);
    for (int i = 0; i < nx1; ++i) {
      const double s = (i + 0.5) / nx1;
      for (int m = 1; m <= nx1; m += 2) {
        const double scale = (m == nx1 ? 1.0 : 2.0) / nx1;
        w_odd_[i] += 2.0 / (m * pi) * scale * std::sin(m * pi * s);
      }
    }
  }

  int n1_, n2_;
  std::unique_ptr<detail::FftwPlans> plans_;
  std::vector<double> w_even_, w_odd_;
};

using GridPtr = std::shared_ptr<const Grid>;

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(GridPtr g, Parity p) : grid_(std::move(g)), parity_(p), v_(grid_->size(), 0.0) {}
  ScalarField(GridPtr g, Parity p, std::vector<double> values)
      : grid_(std::move(g)), parity_(p), v_(std::move(values)) {
    if (v_.size() != grid_->size()) throw std::invalid_argument("ScalarField: size mismatch");
  }

  const GridPtr& grid() const { return grid_; }
  Parity parity() const { return parity_; }
  bool empty() const { return !grid_; }

  double& operator()(int i, int j) { return v_[std::size_t(i) * grid_->nx2() + j]; }
  double operator()(int i, int j) const { return v_[std::size_t(i) * grid_->nx2() + j]; }
  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  ScalarField& operator+=(const ScalarField& o) {
    check_same(o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    check_same(o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (auto& x : v_) x *= s;
    return *this;
  }
  // this += s * o
  ScalarField& axpy(double s, const ScalarField& o) {
    check_same(o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += s * o.v_[k];
    return *this;
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }
  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  void check_same(const ScalarField& o) const {
    if (grid_ != o.grid_ && (grid_->nx1() != o.grid_->nx1() || grid_->nx2() != o.grid_->nx2()))
      throw std::invalid_argument("ScalarField: grid mismatch");
    if (parity_ != o.parity_)
      throw std::invalid_argument("ScalarField: parity mismatch (" +
                                  std::string(to_string(parity_)) + " vs " +
                                  to_string(o.parity_) + ")");
  }

  GridPtr grid_;
  Parity parity_ = Parity::even;
  std::vector<double> v_;
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(ScalarField a, double s) { return a *= s; }
inline ScalarField operator*(double s, ScalarField a) { return a *= s; }

// Pointwise product; parity follows the product of the basis functions.
inline ScalarField multiply(const ScalarField& a, const ScalarField& b) {
  ScalarField r(a.grid(), product_parity(a.parity(), b.parity()));
  auto& rv = r.values();
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t k = 0; k < rv.size(); ++k) rv[k] = av[k] * bv[k];
  return r;
}

class SpectralCoeffs {
 public:
  SpectralCoeffs() = default;
  SpectralCoeffs(GridPtr g, Parity p) : grid_(std::move(g)), parity_(p), c_(grid_->spectral_size()) {}

  const GridPtr& grid() const { return grid_; }
  Parity parity() const { return parity_; }
  cplx& operator()(int k1, int k2) { return c_[std::size_t(k1) * grid_->modes2() + k2]; }
  cplx operator()(int k1, int k2) const { return c_[std::size_t(k1) * grid_->modes2() + k2]; }
  std::vector<cplx>& data() { return c_; }
  const std::vector<cplx>& data() const { return c_; }

  // Range of valid x1 mode numbers for this parity.
  int k1_begin() const { return parity_ == Parity::odd ? 1 : 0; }
  int k1_end() const { return parity_ == Parity::odd ? grid_->nx1() + 1 : grid_->nx1(); }

  SpectralCoeffs& operator+=(const SpectralCoeffs& o) {
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  SpectralCoeffs& operator*=(double s) {
    for (auto& x : c_) x *= s;
    return *this;
  }

 private:
  GridPtr grid_;
  Parity parity_ = Parity::even;
  std::vector<cplx> c_;
};

inline SpectralCoeffs transform_forward(const ScalarField& f) {
  const Grid& g = *f.grid();
  const int n1 = g.nx1(), n2 = g.nx2(), mc = g.modes2();
  std::vector<double> tmp(g.size());
  std::vector<cplx> z(std::size_t(n1) * mc);
  const bool odd = f.parity() == Parity::odd;
  fftw_execute_r2r(odd ? g.plans().dst_fwd : g.plans().dct_fwd,
                   const_cast<double*>(f.values().data()), tmp.data());
  fftw_execute_dft_r2c(g.plans().r2c, tmp.data(), reinterpret_cast<fftw_complex*>(z.data()));
  SpectralCoeffs c(f.grid(), f.parity());
  const double inv2 = 1.0 / n2;
  for (int r = 0; r < n1; ++r) {
    int k1;
    double scale;
    if (odd) {
      k1 = r + 1;
      scale = (k1 == n1 ? 0.5 : 1.0) / n1;
    } else {
      k1 = r;
      scale = (k1 == 0 ? 0.5 : 1.0) / n1;
    }
    for (int k2 = 0; k2 < mc; ++k2) c(k1, k2) = z[std::size_t(r) * mc + k2] * (scale * inv2);
  }
  return c;
}

inline ScalarField transform_inverse(const SpectralCoeffs& c) {
  const Grid& g = *c.grid();
  const int n1 = g.nx1(), mc = g.modes2();
  const bool odd = c.parity() == Parity::odd;
  std::vector<cplx> z(std::size_t(n1) * mc);
  for (int r = 0; r < n1; ++r) {
    int k1;
    double scale;
    if (odd) {
      k1 = r + 1;
      scale = k1 == n1 ? 1.0 : 0.5;
    } else {
      k1 = r;
      scale = k1 == 0 ? 1.0 : 0.5;
    }
    for (int k2 = 0; k2 < mc; ++k2) {
      cplx v = c(k1, k2) * scale;
      // c2r reads only the real part of the DC and Nyquist entries
      z[std::size_t(r) * mc + k2] = v;
    }
  }
  std::vector<double> tmp(g.size());
  fftw_execute_dft_c2r(g.plans().c2r, reinterpret_cast<fftw_complex*>(z.data()), tmp.data());
  ScalarField f(c.grid(), c.parity());
  fftw_execute_r2r(odd ? g.plans().dst_inv : g.plans().dct_inv, tmp.data(), f.values().data());
  return f;
}

// Spectral derivative. x1 derivatives swap parity; the sine mode N has no
// cosine partner on the grid and is dropped, as is the x2 Nyquist mode for
// odd orders in x2.
inline SpectralCoeffs differentiate(const SpectralCoeffs& c, Axis axis, int order = 1) {
  const Grid& g = *c.grid();
  const int n1 = g.nx1(), mc = g.modes2(), nyq = g.nx2() / 2;
  if (order < 0) throw std::invalid_argument("differentiate: negative order");
  SpectralCoeffs cur = c;
  for (int o = 0; o < order; ++o) {
    if (axis == Axis::x2) {
      for (int k1 = 0; k1 <= n1; ++k1)
        for (int k2 = 0; k2 < mc; ++k2) cur(k1, k2) *= cplx(0.0, double(k2));
      // sin(M x2) vanishes on the grid, so odd orders kill the Nyquist column
      if (order % 2 == 1)
        for (int k1 = 0; k1 <= n1; ++k1) cur(k1, nyq) = 0.0;
    } else {
      SpectralCoeffs next(c.grid(), flip(cur.parity()));
      if (cur.parity() == Parity::even) {
        for (int k1 = 1; k1 < n1; ++k1) {
          const double a = -k1 * pi / 2.0;
          for (int k2 = 0; k2 < mc; ++k2) next(k1, k2) = a * cur(k1, k2);
        }
      } else {
        for (int k1 = 1; k1 < n1; ++k1) {
          const double a = k1 * pi / 2.0;
          for (int k2 = 0; k2 < mc; ++k2) next(k1, k2) = a * cur(k1, k2);
        }
      }
      cur = std::move(next);
    }
  }
  return cur;
}

inline ScalarField differentiate(const ScalarField& f, Axis axis, int order = 1) {
  if (order == 0) return f;
  return transform_inverse(differentiate(transform_forward(f), axis, order));
}

// Laplacian eigenvalue of mode (k1, k2): -Delta phi = lambda phi.
inline double laplace_eigenvalue(int k1, int k2) {
  const double a = k1 * pi / 2.0;
  return a * a + double(k2) * k2;
}

inline SpectralCoeffs laplacian(const SpectralCoeffs& c) {
  SpectralCoeffs r = c;
  const Grid& g = *c.grid();
  for (int k1 = 0; k1 <= g.nx1(); ++k1)
    for (int k2 = 0; k2 < g.modes2(); ++k2) r(k1, k2) *= -laplace_eigenvalue(k1, k2);
  return r;
}

inline ScalarField laplacian(const ScalarField& f) {
  return transform_inverse(laplacian(transform_forward(f)));
}

namespace detail {
// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};
}  // namespace detail

// Normalised integral over the channel (the domain has unit measure).
// Compensated so large control fields still report their mean to roundoff.
inline double integrate_domain(const ScalarField& f) {
  const Grid& g = *f.grid();
  const auto& w = g.x1_weights(f.parity());
  const int n2 = g.nx2();
  detail::CompensatedSum total;
  for (int i = 0; i < g.nx1(); ++i) {
    detail::CompensatedSum row;
    const double* p = f.values().data() + std::size_t(i) * n2;
    for (int j = 0; j < n2; ++j) row.add(p[j]);
    total.add(w[i] * row.value());
  }
  return total.value() / n2;
}

inline double integrate_domain(const SpectralCoeffs& c) {
  if (c.parity() == Parity::even) return c(0, 0).real();
  double s = 0.0;
  for (int m = 1; m <= c.grid()->nx1(); m += 2) s += 2.0 / (m * pi) * c(m, 0).real();
  return s;
}

// H^m norm with normalised measure: sum over |alpha| <= m of ||D^alpha f||^2.
inline double sobolev_norm(const SpectralCoeffs& c, int m) {
  if (m < 0) throw std::invalid_argument("sobolev_norm: negative order");
  const Grid& g = *c.grid();
  const int nyq = g.nx2() / 2;
  double total = 0.0;
  for (int k1 = c.k1_begin(); k1 < c.k1_end(); ++k1) {
    const double wx1 = (c.parity() == Parity::even && k1 == 0) ? 1.0 : 0.5;
    const double a2 = std::pow(k1 * pi / 2.0, 2);
    for (int k2 = 0; k2 < g.modes2(); ++k2) {
      const double wx2 = k2 == 0 ? 1.0 : (k2 == nyq ? 0.5 : 2.0);
      const double b2 = double(k2) * k2;
      const double amp = k2 == 0 || k2 == nyq ? std::pow(c(k1, k2).real(), 2) : std::norm(c(k1, k2));
      if (amp == 0.0) continue;
      double weight = 0.0;
      for (int j = 0; j <= m; ++j) {
        // sum_{i=0..j} a2^i b2^(j-i)
        double s = 0.0, ai = 1.0;
        for (int i = 0; i <= j; ++i) {
          s += ai * std::pow(b2, j - i);
          ai *= a2;
        }
        weight += s;
      }
      total += wx1 * wx2 * amp * weight;
    }
  }
  return std::sqrt(total);
}

inline double sobolev_norm(const ScalarField& f, int m) {
  return sobolev_norm(transform_forward(f), m);
}

inline double l2_norm(const ScalarField& f) { return sobolev_norm(f, 0); }

// Zero every mode beyond the 2/3 cutoffs.
inline SpectralCoeffs dealias(SpectralCoeffs c) {
  const Grid& g = *c.grid();
  const int k1max = g.dealias_k1(), k2max = g.dealias_k2();
  for (int k1 = 0; k1 <= g.nx1(); ++k1)
    for (int k2 = 0; k2 < g.modes2(); ++k2)
      if (k1 > k1max || k2 > k2max) c(k1, k2) = 0.0;
  return c;
}

// Keep modes with k1 <= l1 and k2 <= l2.
inline SpectralCoeffs truncate(SpectralCoeffs c, int l1, int l2) {
  const Grid& g = *c.grid();
  for (int k1 = 0; k1 <= g.nx1(); ++k1)
    for (int k2 = 0; k2 < g.modes2(); ++k2)
      if (k1 > l1 || k2 > l2) c(k1, k2) = 0.0;
  return c;
}

// Subtracts the mean; only defined for even fields (constants are even).
inline ScalarField project_mean_free(const ScalarField& f) {
  if (f.parity() != Parity::even)
    throw std::invalid_argument("project_mean_free: constants are not odd-parity fields");
  ScalarField r = f;
  const double m = integrate_domain(f);
  for (auto& v : r.values()) v -= m;
  return r;
}

// Coefficients of f(x1, x2 + b).
inline SpectralCoeffs shift_x2(SpectralCoeffs c, double b) {
  const Grid& g = *c.grid();
  const int nyq = g.nx2() / 2;
  for (int k2 = 0; k2 < g.modes2(); ++k2) {
    const cplx ph = k2 == nyq ? cplx(std::cos(nyq * b), 0.0) : std::polar(1.0, k2 * b);
    for (int k1 = 0; k1 <= g.nx1(); ++k1) c(k1, k2) *= ph;
  }
  return c;
}

inline double basis_x1(Parity p, int k1, double x1) {
  const double s = 0.5 * (x1 + 1.0);
  return p == Parity::odd ? std::sin(k1 * pi * s) : std::cos(k1 * pi * s);
}

// Evaluates the series at an arbitrary point.
inline double evaluate(const SpectralCoeffs& c, double x1, double x2) {
  const Grid& g = *c.grid();
  const int nyq = g.nx2() / 2;
  double total = 0.0;
  std::vector<cplx> e(g.modes2());
  for (int k2 = 0; k2 < g.modes2(); ++k2) e[k2] = std::polar(1.0, k2 * x2);
  for (int k1 = c.k1_begin(); k1 < c.k1_end(); ++k1) {
    double row = c(k1, 0).real();
    for (int k2 = 1; k2 < nyq; ++k2) row += 2.0 * (c(k1, k2) * e[k2]).real();
    row += c(k1, nyq).real() * std::cos(nyq * x2);
    total += row * basis_x1(c.parity(), k1, x1);
  }
  return total;
}

// Values on the wall x1 = -1 (side < 0) or x1 = +1 at the x2 grid points.
inline std::vector<double> boundary_trace(const SpectralCoeffs& c, int side) {
  const Grid& g = *c.grid();
  std::vector<double> out(g.nx2());
  for (int j = 0; j < g.nx2(); ++j) out[j] = evaluate(c, side < 0 ? -1.0 : 1.0, g.x2(j));
  return out;
}

inline ScalarField sample(const GridPtr& g, Parity p,
                          const std::function<double(double, double)>& fn) {
  ScalarField f(g, p);
  for (int i = 0; i < g->nx1(); ++i)
    for (int j = 0; j < g->nx2(); ++j) f(i, j) = fn(g->x1(i), g->x2(j));
  return f;
}

// Single basis mode phi_k1(x1) * (cos|sin)(k2 x2) times amp.
inline ScalarField mode_field(const GridPtr& g, Parity p, int k1, int k2, double amp,
                              bool sine_in_x2 = false) {
  return sample(g, p, [&](double x1, double x2) {
    return amp * basis_x1(p, k1, x1) * (sine_in_x2 ? std::sin(k2 * x2) : std::cos(k2 * x2));
  });
}

// Random band-limited field with modes k1 <= l1, k2 <= l2; coefficient
// magnitudes decay like (1 + k1 + k2)^-decay.
inline ScalarField random_field(const GridPtr& g, Parity p, int l1, int l2, std::mt19937_64& rng,
                                double decay = 2.0) {
  std::normal_distribution<double> nd;
  SpectralCoeffs c(g, p);
  for (int k1 = c.k1_begin(); k1 < std::min(c.k1_end(), l1 + 1); ++k1)
    for (int k2 = 0; k2 <= std::min(l2, g->nx2() / 2 - 1); ++k2) {
      const double s = std::pow(1.0 + k1 + k2, -decay);
      c(k1, k2) = k2 == 0 ? cplx(s * nd(rng), 0.0) : cplx(s * nd(rng), s * nd(rng));
    }
  return transform_inverse(c);
}

}  // namespace bqc
