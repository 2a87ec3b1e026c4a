#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "error.hpp"

namespace sclab {

struct SupercriticalParams {
  int d = 0;
  double p = 0;        // odd integer unless built with the permissive flag
  double m = 0;        // 2/(p-1), the scaling exponent of the soliton tail
  double c_inf = 0;    // c_inf^{p-1} = m (d-2-m)
  double c_pow = 0;    // c_inf^{p-1}
  double discr = 0;
  double tail_gamma = 0;
  double gamma2 = 0;
  double alpha = 0;
  double s_c = 0;
  int k_plus = 0;
  int k_minus = 0;
  double delta_plus = 0;
  double delta_minus = 0;
  double delta_p = 0;
  int delta_k = 0;
};

struct AdmissibilityReport {
  bool is_p_analytic = false;
  bool above_pjl = false;
  bool discr_gt_4 = false;
  bool generic = false;
  int ell = 0;
  bool ell_ok = false;
  int k_ell = 0;
  double delta_ell = 0;
  int unstable_count = 0;
};

inline double joseph_lundgren(int d) {
  if (d < 3) throw Error("invalid-dimension", "joseph_lundgren needs d >= 3");
  if (d <= 10) return std::numeric_limits<double>::infinity();
  return 1.0 + 4.0 / (d - 4.0 - 2.0 * std::sqrt(d - 1.0));
}

namespace detail {

inline bool is_odd_integer(double p) {
  double r = std::round(p);
  return std::abs(p - r) < 1e-12 && static_cast<long>(r) % 2 != 0;
}

// Integer and fractional part with a guard against x = n - 1e-15 landing on
// the wrong side of an integer.
inline void split_floor(double x, int& k, double& frac) {
  double r = std::round(x);
  if (std::abs(x - r) < 1e-12 * std::max(1.0, std::abs(x))) x = r;
  k = static_cast<int>(std::floor(x));
  frac = x - k;
}

}  // namespace detail

// Builds all derived constants.  With permissive = true any real p above the
// Joseph-Lundgren exponent is accepted (exploratory numerology only).
inline SupercriticalParams derive_params(int d, double p, bool permissive = false) {
  if (d < 11)
    throw Error("subcritical-Discr", "d <= 10 has p_JL = +inf, no admissible p");
  if (!permissive && !detail::is_odd_integer(p))
    throw Error("invalid-p", "p must be an odd integer >= 3");
  if (p < 3 && !permissive) throw Error("invalid-p", "p must be >= 3");

  SupercriticalParams P;
  P.d = d;
  P.p = p;
  P.m = 2.0 / (p - 1.0);
  P.c_pow = P.m * (d - 2.0 - P.m);
  P.discr = (d - 2.0) * (d - 2.0) - 4.0 * p * P.c_pow;
  if (!(P.discr > 0) || !(p > joseph_lundgren(d)))
    throw Error("subcritical-Discr", "p <= p_JL(d): Discr <= 0, alpha would be complex");
  P.c_inf = std::pow(P.c_pow, 1.0 / (p - 1.0));
  const double sq = std::sqrt(P.discr);
  P.tail_gamma = 0.5 * (d - 2.0 - sq);
  P.gamma2 = 0.5 * (d - 2.0 + sq);
  P.alpha = P.tail_gamma - P.m;
  P.s_c = 0.5 * d - P.m;
  detail::split_floor(0.5 + 0.5 * (0.5 * d - P.tail_gamma), P.k_plus, P.delta_plus);
  detail::split_floor(0.5 + 0.5 * (0.5 * d - P.m), P.k_minus, P.delta_minus);
  P.delta_p = std::max(P.delta_plus, P.delta_minus);
  P.delta_k = P.k_minus - P.k_plus;
  return P;
}

inline AdmissibilityReport admissibility(const SupercriticalParams& P, int ell) {
  AdmissibilityReport R;
  R.is_p_analytic = detail::is_odd_integer(P.p);
  R.above_pjl = P.p > joseph_lundgren(P.d);
  R.discr_gt_4 = P.discr > 4.0;
  auto non_integer = [](double x) { return std::abs(x - std::round(x)) > 1e-12; };
  R.generic = non_integer(0.5 * P.alpha) && P.delta_plus != 0.0 && P.delta_minus != 0.0;
  R.ell = ell;
  R.ell_ok = ell > 0.5 * P.alpha;
  if (R.ell_ok) {
    detail::split_floor(ell - 0.5 * P.alpha, R.k_ell, R.delta_ell);
    R.unstable_count = ell - 1 + R.k_ell;
  }
  return R;
}

// c_1..c_ell of the exact solution b_j = c_j / s^j (entry j-1 holds c_j).
inline std::vector<double> bk_coefficients(double alpha, int ell) {
  if (!(ell > 0.5 * alpha)) throw Error("ell-too-small", "bk_coefficients needs ell > alpha/2");
  std::vector<double> c(ell);
  const double den = 2.0 * ell - alpha;
  c[0] = ell / den;
  for (int j = 1; j < ell; ++j) c[j] = -alpha * (ell - j) / den * c[j - 1];
  return c;
}

inline std::vector<double> bk_coefficients(const SupercriticalParams& P, int ell) {
  return bk_coefficients(P.alpha, ell);
}

}  // namespace sclab
