// Solves the (d, p) ground state and prints how its tail approaches the
// singular profile c_inf y^{-2/(p-1)}: fitted exponents next to the
// predicted ones, and Q(y) y^{2/(p-1)} at a few radii.
//
//   demo_ground_state_tail [d] [p]

#include <cstdio>
#include <cstdlib>

#include <sclab/ground_state.hpp>

int main(int argc, char** argv) {
  const int d = argc > 1 ? std::atoi(argv[1]) : 12;
  const int p = argc > 2 ? std::atoi(argv[2]) : 7;
  try {
    const auto P = sclab::derive_params(d, p);
    const auto G = sclab::solve_ground_state(P, 1e3, 1e-10);
    std::printf("d = %d, p = %d, alpha = %.7f, gamma = %.6f\n", d, p, P.alpha, P.tail_gamma);
    std::printf("ODE residual %.2e on %zu nodes\n\n", sclab::ode_residual(G), G.Q.size());

    const auto q = sclab::tail_fit(G.Q, {}, 1e2, 1e3);
    const auto dev = sclab::tail_fit(G.dev, {}, 1e2, 1e3);
    const auto lq = sclab::tail_fit(G.LQ, {}, 1e2, 1e3);
    std::printf("%-22s %12s %12s\n", "field on [1e2, 1e3]", "fitted", "predicted");
    std::printf("%-22s %12.6f %12.6f\n", "Q", q.leading_exponent, -P.m);
    std::printf("%-22s %12.6f %12.6f\n", "Q - c_inf y^{-m}", dev.leading_exponent, -P.tail_gamma);
    std::printf("%-22s %12.6f %12.6f\n", "Lambda Q", lq.leading_exponent, -P.tail_gamma);
    std::printf("%-22s %12.8f %12.8f\n\n", "c_inf", G.c_inf_fit, P.c_inf);

    std::printf("%10s %16s\n", "y", "Q y^m / c_inf");
    for (double y : {1.0, 10.0, 100.0, 1000.0}) {
      const double v = G.grid->interpolate(G.Q.v, sclab::Parity::even, y);
      std::printf("%10g %16.10f\n", y, v * std::pow(y, P.m) / P.c_inf);
    }
  } catch (const sclab::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
