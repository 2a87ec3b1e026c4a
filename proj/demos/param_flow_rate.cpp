// Integrates the modulation-parameter system along the explicit orbit for
// several ell and fits lambda(t) ~ (T - t)^{ell/alpha} near blow-up.

#include <cstdio>

#include <sclab/param_flow.hpp>

int main() {
  const auto P = sclab::derive_params(12, 7);
  std::printf("(d, p) = (12, 7), alpha = %.7f\n\n", P.alpha);
  std::printf("%4s %12s %12s %12s %10s\n", "ell", "T", "exponent", "ell/alpha", "rel. err");
  for (int ell = 2; ell <= 5; ++ell) {
    const auto x0 = sclab::explicit_solution(P, ell, 10, ell + 2, 2);
    sclab::IntegrateOptions o;
    o.tol = 1e-13;
    o.samples = 400;
    const auto tr = sclab::integrate(P, x0, 1e5, o);
    const auto fit = sclab::blowup_fit(tr);
    const double expected = ell / P.alpha;
    std::printf("%4d %12.6f %12.6f %12.6f %10.2e\n", ell, fit.T, fit.exponent, expected,
                std::abs(fit.exponent / expected - 1));
  }

  // ell = 2 has exactly one positive eigenvalue, the direction shooting has to tune
  const auto L = sclab::linearization(P.alpha, 2);
  std::printf("\nell = 2 linearization eigenvalues:");
  for (int j = 0; j < L.ell; ++j) std::printf(" %.6f", L.D(j));
  std::printf("\n");
}
