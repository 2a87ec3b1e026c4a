#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "jet.hpp"
#include "numerology.hpp"

namespace sclab {

// Linearization about the singular self-similar solution R = c_inf r^{-m}:
//   H = H0 - [1/(p-1) + r d_r / 2],  H0 = [[0, H-], [-H+, 0]],
//   H+ = -Delta - p c_inf^{p-1} / r^2,  H- = -Delta - c_inf^{p-1} / r^2.
// Eigenvectors are finite sums of J^k applied to monomials, so everything is
// done on (component, exponent, coefficient) triples over a scalar type T:
// cpp_rational when the discriminant is a perfect square, double otherwise.

enum class Family { plus, minus };

inline const char* to_string(Family f) { return f == Family::plus ? "plus" : "minus"; }

inline Family parse_family(const std::string& s) {
  if (s == "plus" || s == "+") return Family::plus;
  if (s == "minus" || s == "-") return Family::minus;
  throw Error("invalid-family", "family must be plus or minus");
}

using Rational = boost::multiprecision::cpp_rational;

template <class T>
struct SelfSimParams {
  int d = 0;
  T p{}, m{}, c_plus{}, c_minus{}, gamma{};
};

inline SelfSimParams<double> selfsim_params(const SupercriticalParams& P) {
  return {P.d, P.p, P.m, P.p * P.c_pow, P.c_pow, P.tail_gamma};
}

namespace detail {

inline bool exact_sqrt(const boost::multiprecision::cpp_int& n, boost::multiprecision::cpp_int& r) {
  if (n < 0) return false;
  r = boost::multiprecision::sqrt(n);
  return r * r == n;
}

}  // namespace detail

// Exact parameters; needs an integer p and a rational square root of Discr.
inline SelfSimParams<Rational> selfsim_params_exact(int d, int p) {
  using boost::multiprecision::cpp_int;
  derive_params(d, p);  // throws for an inadmissible (d, p)
  SelfSimParams<Rational> S;
  S.d = d;
  S.p = p;
  S.m = Rational(2, p - 1);
  const Rational c_pow = S.m * (Rational(d - 2) - S.m);
  S.c_minus = c_pow;
  S.c_plus = S.p * c_pow;
  const Rational discr = Rational((d - 2) * (d - 2)) - 4 * S.c_plus;
  cpp_int rn, rd;
  if (!detail::exact_sqrt(numerator(discr), rn) || !detail::exact_sqrt(denominator(discr), rd))
    throw Error("irrational-discr", "Discr is not the square of a rational");
  S.gamma = (Rational(d - 2) - Rational(rn, rd)) / 2;
  return S;
}

template <class T>
struct MonoTerm {
  int comp = 0;  // 0 = first (real) slot, 1 = second
  T e{};         // exponent of r
  T c{};
};

template <class T>
using MonoSum = std::vector<MonoTerm<T>>;

namespace detail {

template <class T>
MonoTerm<T> J_term(MonoTerm<T> t) {
  if (t.comp == 0) {
    t.comp = 1;
  } else {
    t.comp = 0;
    t.c = -t.c;
  }
  return t;
}

// H0 on one monomial: H+- r^e = -(e (e + d - 2) + c+-) r^{e - 2}.
template <class T>
MonoTerm<T> H0_term(const SelfSimParams<T>& S, const MonoTerm<T>& t) {
  const T sym = t.e * (t.e + T(S.d - 2));
  if (t.comp == 0) return {1, t.e - 2, t.c * (sym + S.c_plus)};
  return {0, t.e - 2, -t.c * (sym + S.c_minus)};
}

template <class T>
bool same_exponent(const T& a, const T& b) {
  return a == b;
}
inline bool same_exponent(double a, double b) { return std::abs(a - b) <= 1e-12 * (1 + std::abs(a)); }

template <class T>
void add_term(MonoSum<T>& s, const MonoTerm<T>& t) {
  for (auto& u : s)
    if (u.comp == t.comp && same_exponent(u.e, t.e)) {
      u.c += t.c;
      return;
    }
  s.push_back(t);
}

template <class T>
T abs_value(const T& x) {
  return x < T(0) ? T(-x) : x;
}

}  // namespace detail

template <class T>
struct SelfSimilarEigenpair {
  Family family = Family::plus;
  int ell = 0;
  T decay_rate{};           // lambda_{ell,+-}
  T operator_eigenvalue{};  // -lambda: H Phi = -lambda Phi
  T beta{};                 // leading exponent, -gamma or -2/(p-1)
  std::vector<T> c;         // c_0 = 1, ..., c_ell
  SelfSimParams<T> params;

  // Phi = sum_k c_k J^k (r^{beta + 2k} in the family slot).
  MonoSum<T> terms() const {
    MonoSum<T> s;
    const int slot = family == Family::plus ? 0 : 1;
    for (int k = 0; k <= ell; ++k) {
      MonoTerm<T> t{slot, beta + T(2 * k), c[k]};
      for (int j = 0; j < k; ++j) t = detail::J_term(t);
      s.push_back(t);
    }
    return s;
  }
};

template <class T>
SelfSimilarEigenpair<T> build_eigenpair(const SelfSimParams<T>& S, Family fam, int ell) {
  if (ell < 0) throw Error("invalid-ell", "ell must be >= 0");
  SelfSimilarEigenpair<T> E;
  E.family = fam;
  E.ell = ell;
  E.params = S;
  const T inv = S.m / 2;  // 1/(p-1)
  E.beta = fam == Family::plus ? T(-S.gamma) : T(-S.m);
  E.decay_rate = fam == Family::plus ? T(inv - S.gamma / 2 + T(ell)) : T(ell);
  E.operator_eigenvalue = -E.decay_rate;
  E.c.assign(ell + 1, T(0));
  E.c[0] = T(1);
  const int slot = fam == Family::plus ? 0 : 1;
  for (int k = 0; k < ell; ++k) {
    // the J^k slot at exponent beta + 2k collects
    //   c_{k+1} H0 J^{k+1} r^{beta + 2k + 2}  and  c_k (lambda - 1/(p-1) - (beta + 2k)/2) J^k r^{beta + 2k}
    MonoTerm<T> up{slot, E.beta + T(2 * k + 2), T(1)};
    for (int j = 0; j <= k; ++j) up = detail::J_term(up);
    const MonoTerm<T> dk = detail::H0_term(S, up);
    MonoTerm<T> here{slot, E.beta + T(2 * k), T(1)};
    for (int j = 0; j < k; ++j) here = detail::J_term(here);
    const T ek = here.c * (E.decay_rate - inv - (E.beta + T(2 * k)) / 2);
    if (dk.c == T(0)) throw Error("recursion-degenerate", "d_k = 0 in the eigenvector recursion");
    E.c[k + 1] = -E.c[k] * ek / dk.c;
  }
  return E;
}

// H Phi + lambda Phi as a monomial sum, with lambda = decay_rate + shift.
template <class T>
MonoSum<T> apply_shifted(const SelfSimilarEigenpair<T>& E, const T& shift = T(0)) {
  const auto& S = E.params;
  const T inv = S.m / 2;
  const T lam = E.decay_rate + shift;
  MonoSum<T> out;
  for (const auto& t : E.terms()) {
    detail::add_term(out, detail::H0_term(S, t));
    detail::add_term(out, MonoTerm<T>{t.comp, t.e, t.c * (lam - inv - t.e / 2)});
  }
  return out;
}

// max |coefficient| of H Phi + lambda Phi; exactly zero in rational arithmetic.
template <class T>
T coefficient_residual(const SelfSimilarEigenpair<T>& E) {
  T worst(0);
  for (const auto& t : apply_shifted(E)) worst = std::max(worst, detail::abs_value(t.c));
  return worst;
}

inline SelfSimilarEigenpair<double> to_double(const SelfSimilarEigenpair<Rational>& E) {
  SelfSimilarEigenpair<double> D;
  D.family = E.family;
  D.ell = E.ell;
  D.decay_rate = static_cast<double>(E.decay_rate);
  D.operator_eigenvalue = static_cast<double>(E.operator_eigenvalue);
  D.beta = static_cast<double>(E.beta);
  for (const auto& x : E.c) D.c.push_back(static_cast<double>(x));
  const auto& S = E.params;
  D.params = {S.d, static_cast<double>(S.p), static_cast<double>(S.m), static_cast<double>(S.c_plus),
              static_cast<double>(S.c_minus), static_cast<double>(S.gamma)};
  return D;
}

// Pointwise cross-check: Phi is evaluated as Taylor jets in z, H is applied
// with the radial Laplacian of the jets, and
//   sup_z |H Phi + (lambda + shift) Phi| / sup_z |Phi|
// is returned over `points` equispaced nodes of [z_lo, z_hi].
inline double eigen_residual(const SelfSimilarEigenpair<double>& E, double z_lo, double z_hi, int points = 400,
                             double shift = 0.0) {
  if (!(z_lo > 0) || !(z_hi > z_lo)) throw Error("invalid-annulus", "annulus must satisfy 0 < z_lo < z_hi");
  const auto& S = E.params;
  const double inv = S.m / 2;
  const double lam = E.decay_rate + shift;
  const auto terms = E.terms();
  double rmax = 0, phimax = 0;
  for (int i = 0; i < points; ++i) {
    const double z = z_lo + (z_hi - z_lo) * i / std::max(points - 1, 1);
    const Jet r = Jet::variable(z, 2);
    Jet f[2] = {Jet(2), Jet(2)};
    for (const auto& t : terms) f[t.comp] = f[t.comp] + t.c * pow(r, t.e);
    const double pot[2] = {S.c_plus / (z * z), S.c_minus / (z * z)};
    double Hf[2];
    for (int c = 0; c < 2; ++c) {
      const double Hc = -radial_laplacian(f[c], z, S.d)[0] - pot[c] * f[c][0];
      Hf[c] = Hc;
    }
    // H0 (f1, f2) = (H- f2, -H+ f1)
    double res[2] = {Hf[1], -Hf[0]};
    for (int c = 0; c < 2; ++c) res[c] += (lam - inv) * f[c][0] - 0.5 * z * f[c][1];
    rmax = std::max({rmax, std::hypot(res[0], res[1])});
    phimax = std::max(phimax, std::hypot(f[0][0], f[1][0]));
  }
  return rmax / phimax;
}

}  // namespace sclab
