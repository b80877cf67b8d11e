// Large initial temperature -xi/delta steers the vorticity to w0 - d1 xi in
// time delta.  Prints the error for a shrinking delta.

#include <cstdio>

#include "bqc/bqc.hpp"

using namespace bqc;

int main() {
  const auto g = Grid::make(64, 64);
  const SimConfig cfg{g, 0.05, 0.05, {1e-3, 0.0}};
  const ScalarField w0 = mode_field(g, Parity::odd, 1, 1, 0.5) + mode_field(g, Parity::odd, 2, 1, 0.2, true);
  const ScalarField wT = mode_field(g, Parity::odd, 1, 2, 0.4) + mode_field(g, Parity::odd, 2, 0, -0.3);
  const XiProfile xi = build_xi(w0, wT, 1e-3);
  State s0 = State::zero(g);
  s0.w = w0;
  std::printf("||w0 - wT||_1 = %.4g, xi fit error %.3g\n", sobolev_norm(w0 - wT, 1), xi.error);
  std::printf("%8s %12s %12s %12s\n", "delta", "e(delta)", "||q||_1", "||r||_1");
  for (double delta : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
    const VorticitySteeringResult r = steer_vorticity(cfg, s0, xi.xi, delta);
    std::printf("%8.4g %12.4e %12.4e %12.4e\n", delta, r.error, r.rem.q, r.rem.r);
  }
}
