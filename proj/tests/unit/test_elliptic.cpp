#include <catch_amalgamated.hpp>

#include "bqc/elliptic.hpp"

using namespace bqc;
using Catch::Matchers::WithinAbs;

TEST_CASE("closed-form stream function is recovered", "[elliptic]") {
  // psi = sin(pi s) e^{cos pi s} e^{sin x2}: its odd extension in s is smooth,
  // so the sine series converges spectrally.
  auto g = Grid::make(64, 64);
  auto a = [](double s) { return std::sin(pi * s) * std::exp(std::cos(pi * s)); };
  auto da = [](double s) {
    return pi * std::exp(std::cos(pi * s)) * (std::cos(pi * s) - std::pow(std::sin(pi * s), 2));
  };
  auto dda = [](double s) {
    const double sn = std::sin(pi * s), cs = std::cos(pi * s);
    return pi * pi * std::exp(cs) * sn * (sn * sn - 3 * cs - 1);
  };
  auto b = [](double x2) { return std::exp(std::sin(x2)); };
  auto ddb = [](double x2) {
    return std::exp(std::sin(x2)) * (std::pow(std::cos(x2), 2) - std::sin(x2));
  };
  auto w = sample(g, Parity::odd, [&](double x1, double x2) {
    const double s = 0.5 * (x1 + 1);
    return -(0.25 * dda(s) * b(x2) + a(s) * ddb(x2));
  });
  auto psi = solve_streamfunction(w);
  auto ref = sample(g, Parity::odd, [&](double x1, double x2) { return a(0.5 * (x1 + 1)) * b(x2); });
  CHECK((psi - ref).max_abs() < 1e-12);

  auto u = velocity_from_vorticity(w, 0.4);
  auto u2_exact = sample(g, Parity::even, [&](double x1, double x2) {
    return -0.5 * da(0.5 * (x1 + 1)) * b(x2) + 0.4;
  });
  CHECK((u.u2 - u2_exact).max_abs() < 1e-11);
}

TEST_CASE("velocity is divergence free, tangent to the walls and has the requested mean",
          "[elliptic][property]") {
  auto g = Grid::make(64, 64);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> mean(-2.0, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    auto w = random_field(g, Parity::odd, 40, 20, rng);
    auto u = velocity_from_vorticity(w, mean(rng));
    auto r = divcurl_residual(u, w);
    CHECK(r.divergence < 1e-10);
    CHECK(r.curl < 1e-10);
    CHECK(r.wall_normal < 1e-12);
    CHECK(r.mean < 1e-12);
  }
}

TEST_CASE("adding sin(x2) to u2 shows up as divergence only", "[elliptic]") {
  auto g = Grid::make(32, 32);
  std::mt19937_64 rng(4);
  auto w = random_field(g, Parity::odd, 10, 10, rng);
  auto u = velocity_from_vorticity(w, 0.0);
  u.u2 += sample(g, Parity::even, [](double, double x2) { return std::sin(x2); });
  auto r = divcurl_residual(u, w);
  CHECK_THAT(r.divergence, WithinAbs(std::sqrt(0.5), 1e-12));
  CHECK(r.curl < 1e-12);
}

TEST_CASE("elliptic estimate constant stays below the modal bound", "[elliptic][property]") {
  // ||u||_1^2 = sum |w|^2 (1 + 1/lambda) + c^2 with lambda >= pi^2/4, so
  // ||u||_1 <= sqrt(1 + 4/pi^2) ||w||_0 + |c|.
  auto g = Grid::make(48, 48);
  std::mt19937_64 rng(8);
  const double bound = std::sqrt(1 + 4 / (pi * pi));
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    auto w = random_field(g, Parity::odd, 30, 15, rng, trial % 3);
    const double c = 0.1 * trial - 1.0;
    auto u = velocity_from_vorticity(w, c);
    const double n1 = std::sqrt(std::pow(sobolev_norm(u.u1, 1), 2) + std::pow(sobolev_norm(u.u2, 1), 2));
    const double ratio = n1 / (l2_norm(w) + std::abs(c));
    worst = std::max(worst, ratio);
  }
  CHECK(worst <= bound + 1e-9);
  CHECK(worst > 0.5);
}

TEST_CASE("wrong parity vorticity is rejected", "[elliptic]") {
  auto g = Grid::make(16, 16);
  CHECK_THROWS_AS(solve_streamfunction(ScalarField(g, Parity::even)), std::invalid_argument);
}
