#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ground_state.hpp"
#include "jet.hpp"

namespace sclab {

// ---------------------------------------------------------------------------
// Forward operators on grid fields

inline RadialField apply_Lplus(const RadialField& f, const Potentials& pot) {
  require_same_grid(f, pot.W_plus);
  RadialField r(f.grid, f.d, f.grid->laplacian(f.v, f.d));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = -r[i] - pot.W_plus[i] * f[i];
  return r;
}

inline RadialField apply_Lminus(const RadialField& f, const Potentials& pot) {
  require_same_grid(f, pot.W_minus);
  RadialField r(f.grid, f.d, f.grid->laplacian(f.v, f.d));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = -r[i] - pot.W_minus[i] * f[i];
  return r;
}

// L~ u = (L_- Im u, -L_+ Re u)
inline ComplexPair apply_Ltilde(const ComplexPair& u, const Potentials& pot) {
  return {apply_Lminus(u.im, pot), -apply_Lplus(u.re, pot)};
}

// L~* v = (-L_+ Im v, L_- Re v), the adjoint for the real inner product.
inline ComplexPair apply_Ltilde_adj(const ComplexPair& v, const Potentials& pot) {
  return {-apply_Lplus(v.im, pot), apply_Lminus(v.re, pot)};
}

// ---------------------------------------------------------------------------
// Inversion by the factorized Green's formulas

struct InversionReport {
  bool from_infinity = false;
  double branch_ratio = 0;  // int |g| over the last decade / previous decade
  double tail_exponent = 0; // exponent used for the analytic tail beyond rmax
};

namespace detail {

// Solves -(1/(y^{d-1} K)) (y^{d-1} K^2 v')' = f and returns u = K v, where K is
// the positive kernel element.  v' = g = -(int_0^y f K x^{d-1}) / (y^{d-1} K^2).
// branch: 0 = integrate v from the origin, 1 = from infinity, -1 = decide.
inline RadialField invert_factorized(const RadialField& f, const RadialField& K, int branch, InversionReport* rep,
                                     const std::vector<double>& tail_hyps) {
  require_same_grid(f, K);
  const auto& G = *f.grid;
  const int d = f.d;
  const std::size_t n = f.size();
  RadialField out(f.grid, d);
  if (f.is_zero()) {
    if (rep) *rep = InversionReport{};
    return out;
  }
  if (f.parity != Parity::even) throw Error("parity", "inversion expects an even field");
  RadialField fK = mul(f, K);
  const auto F = G.cumulative(fK.v, Parity::even, d - 1.0);
  RadialField g(f.grid, d, Parity::odd);
  for (std::size_t i = 1; i < n; ++i) g[i] = -F[i] / (std::pow(G.y(i), d - 1.0) * K[i] * K[i]);

  InversionReport R;
  const double rmax = G.rmax();
  if (branch != 0 || rep) {
    RadialField ag = g;
    for (double& x : ag.v) x = std::abs(x);
    const double last = G.integral_between(ag.v, Parity::even, 0.0, rmax / 10, rmax);
    const double prev = G.integral_between(ag.v, Parity::even, 0.0, rmax / 100, rmax / 10);
    R.branch_ratio = prev > 0 ? last / prev : (last > 0 ? INFINITY : 0.0);
  }
  if (branch < 0) {
    if (R.branch_ratio < 0.5)
      branch = 1;
    else if (R.branch_ratio > 2.0)
      branch = 0;
    else
      throw Error("branch-ambiguous", "tail integrability test inconclusive, ratio " + std::to_string(R.branch_ratio));
  }
  R.from_infinity = branch == 1;

  const auto V = G.cumulative(g.v, Parity::odd, 0.0);
  double shift = 0;
  if (branch == 1) {
    // analytic continuation of int_rmax^inf g from a power-law fit on the outer decade
    double tail = 0;
    const bool all_same_sign = [&] {
      for (std::size_t i = G.locate(rmax / 10); i < n; ++i)
        if (g[i] == 0.0 || (g[i] > 0) != (g[n - 1] > 0)) return false;
      return true;
    }();
    if (all_same_sign) {
      std::vector<double> hyps = tail_hyps;
      if (hyps.empty()) {
        TailFit free = tail_fit(g, {}, rmax / 10, rmax);
        hyps = {free.leading_exponent};
      }
      TailFit T = tail_fit(g, hyps, rmax / 10, rmax);
      R.tail_exponent = hyps[0];
      for (std::size_t j = 0; j < hyps.size(); ++j) {
        if (!(hyps[j] < -1)) throw Error("branch-ambiguous", "tail of the convergent branch is not integrable");
        tail += -T.coeffs[j] * std::pow(rmax, hyps[j] + 1) / (hyps[j] + 1);
      }
    }
    shift = V[n - 1] + tail;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = K[i] * (V[i] - shift);
  if (rep) *rep = R;
  return out;
}

}  // namespace detail

// L_+^{-1} f, integrated from the origin (the regular solution with u(0)
// fixed by v(0) = 0).
inline RadialField invert_Lplus(const RadialField& f, const GroundState& gs) {
  return detail::invert_factorized(f, gs.LQ, 0, nullptr, {});
}

// L_-^{-1} f with the branch chosen by the tail integrability test.
// tail_hyps optionally pins the exponents used to extrapolate the convergent
// branch beyond rmax.
inline RadialField invert_Lminus(const RadialField& f, const GroundState& gs, InversionReport* rep = nullptr,
                                 const std::vector<double>& tail_hyps = {}) {
  return detail::invert_factorized(f, gs.Q, -1, rep, tail_hyps);
}

// ---------------------------------------------------------------------------
// Kernel families

struct ProfileFamily {
  SupercriticalParams params;
  std::shared_ptr<const GroundState> gs;
  Potentials pot;
  int L_plus = 0, L_minus = 0;
  std::vector<ComplexPair> phi_plus, phi_minus;
  std::vector<ComplexPair> psi_plus, psi_minus;  // index i = 1..L, slot 0 unused
  std::vector<TailFit> phi_plus_fit, phi_minus_fit, psi_plus_fit, psi_minus_fit;
  std::vector<double> phi_plus_expected, phi_minus_expected;
  std::vector<double> phi_plus_residual, phi_minus_residual;  // slot 0 unused
  std::vector<InversionReport> minus_inversions;              // every L_- inversion, in order
  double fit_lo = 0, fit_hi = 0;

  const GridPtr& grid() const { return gs->grid; }
};

// J^k u
inline ComplexPair J_pow(ComplexPair u, int k) {
  for (int j = 0; j < ((k % 4) + 4) % 4; ++j) u = J(u);
  return u;
}

// The component of J^k Phi_{k,+} (real part) or J^k Phi_{k,-} (imaginary part)
// that carries the distinguished tail.
inline RadialField tail_component(const ComplexPair& u, int k, bool plus) {
  ComplexPair v = J_pow(u, k);
  return plus ? v.re : v.im;
}

namespace detail {

inline double sup_on(const RadialField& f, double ymax) {
  double m = 0;
  for (std::size_t i = 0; i < f.size() && f.grid->y(i) <= ymax; ++i) m = std::max(m, std::abs(f[i]));
  return m;
}

inline double sup_on(const ComplexPair& u, double ymax) {
  return std::max(sup_on(u.re, ymax), sup_on(u.im, ymax));
}

// Lambda f = m f + y f'
inline RadialField lambda_op(const RadialField& f, double m) {
  RadialField df = f.derivative();
  RadialField r = f;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = m * f[i] + f.grid->y(i) * df[i];
  return r;
}

}  // namespace detail

// L~^{-1}(f1, f2) = (-L_+^{-1} f2, L_-^{-1} f1)
inline ComplexPair invert_Ltilde(const ComplexPair& u, const GroundState& gs, InversionReport* rep = nullptr,
                                 const std::vector<double>& tail_hyps = {}) {
  return {-invert_Lplus(u.im, gs), invert_Lminus(u.re, gs, rep, tail_hyps)};
}

inline ComplexPair psi_of(const ComplexPair& phi, double shift, double m) {
  ComplexPair L{detail::lambda_op(phi.re, m), detail::lambda_op(phi.im, m)};
  return L - shift * phi;
}

inline ProfileFamily generate_phi_family(const GroundState& gs, const Potentials& pot, int L_plus) {
  const auto& P = gs.params;
  ProfileFamily F;
  F.params = P;
  F.gs = std::make_shared<const GroundState>(gs);
  F.pot = pot;
  F.L_plus = L_plus;
  F.L_minus = L_plus - P.delta_k;
  if (L_plus < 1 || F.L_minus < 0)
    throw Error("L-too-small", "need L_plus >= 1 and L_minus = L_plus - delta_k >= 0");
  const GridPtr& grid = gs.grid;
  const int d = P.d;
  const double rmax = grid->rmax();
  F.fit_hi = rmax;
  F.fit_lo = rmax / 10;

  F.phi_plus.push_back({gs.LQ, RadialField(grid, d)});
  F.phi_minus.push_back({RadialField(grid, d), gs.Q});
  F.phi_plus_expected.push_back(-P.tail_gamma);
  F.phi_minus_expected.push_back(-P.m);

  auto step = [&](const ComplexPair& prev, double e_prev) {
    // the L_- inversion acts on Re prev; its integrand decays like y^{1 + e + m}
    const double beta = 1.0 + e_prev + P.m;
    InversionReport rep;
    ComplexPair next = invert_Ltilde(prev, gs, &rep, {beta, beta - P.alpha});
    if (!prev.re.is_zero()) F.minus_inversions.push_back(rep);
    return next;
  };
  for (int k = 1; k <= F.L_plus; ++k) {
    F.phi_plus.push_back(step(F.phi_plus[k - 1], F.phi_plus_expected[k - 1]));
    F.phi_plus_expected.push_back(2.0 * k - P.tail_gamma);
  }
  for (int k = 1; k <= F.L_minus; ++k) {
    F.phi_minus.push_back(step(F.phi_minus[k - 1], F.phi_minus_expected[k - 1]));
    F.phi_minus_expected.push_back(2.0 * k - P.m);
  }

  auto fit_member = [&](const ComplexPair& u, int k, bool plus, const std::string& tag) {
    try {
      return tail_fit(tail_component(u, k, plus), {}, F.fit_lo, F.fit_hi);
    } catch (const Error& e) {
      throw Error(e.code(), tag + "[" + std::to_string(k) + "]: " + e.what());
    }
  };
  for (int k = 0; k <= F.L_plus; ++k) F.phi_plus_fit.push_back(fit_member(F.phi_plus[k], k, true, "phi_plus"));
  for (int k = 0; k <= F.L_minus; ++k) F.phi_minus_fit.push_back(fit_member(F.phi_minus[k], k, false, "phi_minus"));

  const double yres = rmax / 2;
  F.phi_plus_residual.assign(F.L_plus + 1, 0.0);
  F.phi_minus_residual.assign(F.L_minus + 1, 0.0);
  for (int k = 1; k <= F.L_plus; ++k) {
    ComplexPair r = apply_Ltilde(F.phi_plus[k], pot) - F.phi_plus[k - 1];
    F.phi_plus_residual[k] = detail::sup_on(r, yres) / detail::sup_on(F.phi_plus[k - 1], yres);
  }
  for (int k = 1; k <= F.L_minus; ++k) {
    ComplexPair r = apply_Ltilde(F.phi_minus[k], pot) - F.phi_minus[k - 1];
    F.phi_minus_residual[k] = detail::sup_on(r, yres) / detail::sup_on(F.phi_minus[k - 1], yres);
  }
  return F;
}

// Psi_{i,+} = Lambda Phi_{i,+} - (2i - alpha) Phi_{i,+},
// Psi_{i,-} = Lambda Phi_{i,-} - 2i Phi_{i,-}.
inline void psi_directions(ProfileFamily& F) {
  const auto& P = F.params;
  F.psi_plus.assign(F.L_plus + 1, ComplexPair{});
  F.psi_minus.assign(F.L_minus + 1, ComplexPair{});
  F.psi_plus_fit.assign(F.L_plus + 1, TailFit{});
  F.psi_minus_fit.assign(F.L_minus + 1, TailFit{});
  for (int i = 1; i <= F.L_plus; ++i) {
    F.psi_plus[i] = psi_of(F.phi_plus[i], 2.0 * i - P.alpha, P.m);
    F.psi_plus_fit[i] = tail_fit(tail_component(F.psi_plus[i], i, true), {}, F.fit_lo, F.fit_hi);
  }
  for (int i = 1; i <= F.L_minus; ++i) {
    F.psi_minus[i] = psi_of(F.phi_minus[i], 2.0 * i, P.m);
    F.psi_minus_fit[i] = tail_fit(tail_component(F.psi_minus[i], i, false), {}, F.fit_lo, F.fit_hi);
  }
}

// ---------------------------------------------------------------------------
// Localized dual directions

struct XiDirections {
  double M = 0;
  int L_plus = 0, L_minus = 0;
  ComplexPair xi_plus, xi_minus;
  // (L~*)^k Xi_{M,+} for 0 <= k <= L_plus and (L~*)^k Xi_{M,-} for 0 <= k <= L_minus
  std::vector<ComplexPair> adj_plus, adj_minus;
  // c^+_{m,+}, c^+_{m,-}, c^-_{m,+}, c^-_{m,-}
  std::vector<double> cp_plus, cp_minus, cm_plus, cm_minus;
  double pairing = 0;  // (J chi_M Phi_{0,+}, Phi_{0,-}) = int chi_M Lambda Q Q y^{d-1}
  // pairing tables (Phi_{j,+}, Xi_{M,s}) and (Phi_{j,-}, Xi_{M,s})
  std::vector<double> plus_on_xi_plus, minus_on_xi_plus, plus_on_xi_minus, minus_on_xi_minus;
};

namespace detail {

struct JetPair {
  Jet re, im;
};

// Values of (L~*)^m J chi_M Phi_{0,+} and (L~*)^m J chi_M Phi_{0,-} for
// m = 1..mmax at radius y0 in the annulus M < y0 < 2M, from jets of Q and
// Lambda Q at y0.  Outside the annulus these vanish identically because L~*
// annihilates J Phi_{0,+-} where chi = 1.
inline void adjoint_powers_at(double y0, double M, int mmax, const Jet& q, const Jet& lq, const SupercriticalParams& P,
                              std::vector<std::array<double, 4>>& out) {
  const int order = 2 * mmax;
  const int d = P.d;
  const Jet chi = cutoff_jet(y0, M, order);
  const Jet Wm = pow(q, P.p - 1.0);
  const Jet Wp = P.p * Wm;
  auto L = [&](const Jet& W, const Jet& f) {
    return -(radial_laplacian(f, y0, d) + W.truncated(f.order() - 2) * f.truncated(f.order() - 2));
  };
  JetPair vp{Jet(order), chi * lq};
  JetPair vm{-(chi * q), Jet(order)};
  out.assign(mmax + 1, {0, 0, 0, 0});
  out[0] = {vp.re.value(), vp.im.value(), vm.re.value(), vm.im.value()};
  for (int m = 1; m <= mmax; ++m) {
    vp = JetPair{-L(Wp, vp.im), L(Wm, vp.re)};
    vm = JetPair{-L(Wp, vm.im), L(Wm, vm.re)};
    out[m] = {vp.re.value(), vp.im.value(), vm.re.value(), vm.im.value()};
  }
}

inline void cutoff_adjoint_powers(const ProfileFamily& F, double M, int mmax, std::vector<ComplexPair>& Xp,
                                  std::vector<ComplexPair>& Xm) {
  const auto& gs = *F.gs;
  const GridPtr& grid = gs.grid;
  const int d = F.params.d;
  const std::size_t n = grid->size();
  Xp.assign(mmax + 1, ComplexPair::zero(grid, d));
  Xm.assign(mmax + 1, ComplexPair::zero(grid, d));
  for (std::size_t i = 0; i < n; ++i) {
    const double c = smooth_step(grid->y(i) / M);
    Xp[0].im[i] = c * gs.LQ[i];
    Xm[0].re[i] = -c * gs.Q[i];
  }
  if (mmax == 0) return;
  GroundStateJets jets(gs);
  std::vector<std::array<double, 4>> vals;
  for (std::size_t i = 0; i < n; ++i) {
    const double y0 = grid->y(i);
    if (y0 <= M || y0 >= 2 * M) continue;
    adjoint_powers_at(y0, M, mmax, jets.Q(i, 2 * mmax), jets.LQ(i, 2 * mmax), F.params, vals);
    for (int m = 1; m <= mmax; ++m) {
      Xp[m].re[i] = vals[m][0];
      Xp[m].im[i] = vals[m][1];
      Xm[m].re[i] = vals[m][2];
      Xm[m].im[i] = vals[m][3];
    }
  }
}

// Pairings (X^+_m, Phi_{k,s}) and (X^-_m, Phi_{k,s}), where X^{+-}_m are the
// cutoff adjoint powers above.  The transition annulus is integrated with
// composite Gauss-Legendre panels and jets evaluated at the Gauss points;
// the steep derivatives of chi make plain grid quadrature too coarse once the
// recursion multiplies these numbers by coefficients of size M^{2k}.
struct XiPairings {
  // [m][k]
  std::vector<std::vector<double>> xp_phi_plus, xp_phi_minus, xm_phi_plus, xm_phi_minus;
};

inline XiPairings xi_pairings(const ProfileFamily& F, double M, int mmax, int panels = 96) {
  const auto& gs = *F.gs;
  const auto& G = *gs.grid;
  const int d = F.params.d;
  const int Lp = F.L_plus, Lm = F.L_minus;
  XiPairings R;
  R.xp_phi_plus.assign(mmax + 1, std::vector<double>(Lp + 1, 0.0));
  R.xm_phi_plus.assign(mmax + 1, std::vector<double>(Lp + 1, 0.0));
  R.xp_phi_minus.assign(mmax + 1, std::vector<double>(Lm + 1, 0.0));
  R.xm_phi_minus.assign(mmax + 1, std::vector<double>(Lm + 1, 0.0));

  // chi = 1 on [0, M]: only m = 0 contributes there
  for (int k = 0; k <= Lp; ++k) {
    const auto& ph = F.phi_plus[k];
    R.xp_phi_plus[0][k] = G.integral_between(mul(gs.LQ, ph.im).v, Parity::even, d - 1.0, 0.0, M);
    R.xm_phi_plus[0][k] = -G.integral_between(mul(gs.Q, ph.re).v, Parity::even, d - 1.0, 0.0, M);
  }
  for (int k = 0; k <= Lm; ++k) {
    const auto& ph = F.phi_minus[k];
    R.xp_phi_minus[0][k] = G.integral_between(mul(gs.LQ, ph.im).v, Parity::even, d - 1.0, 0.0, M);
    R.xm_phi_minus[0][k] = -G.integral_between(mul(gs.Q, ph.re).v, Parity::even, d - 1.0, 0.0, M);
  }

  using rule = boost::math::quadrature::gauss<double, 20>;
  const auto& xs = rule::abscissa();
  const auto& ws = rule::weights();
  GroundStateJets jets(gs);
  std::vector<std::array<double, 4>> vals;
  const double width = M / panels;
  for (int pnl = 0; pnl < panels; ++pnl) {
    const double a = M + pnl * width, c = a + 0.5 * width, r = 0.5 * width;
    for (std::size_t q = 0; q < xs.size(); ++q) {
      for (int sgn : {-1, 1}) {
        if (q == 0 && sgn == 1 && xs[0] == 0.0) continue;
        const double y = c + sgn * r * xs[q];
        const double w = ws[q] * r * std::pow(y, d - 1.0);
        adjoint_powers_at(y, M, mmax, jets.Q_at(y, 2 * mmax), jets.LQ_at(y, 2 * mmax), F.params, vals);
        auto acc = [&](const std::vector<ComplexPair>& phis, std::vector<std::vector<double>>& xp,
                       std::vector<std::vector<double>>& xm) {
          for (std::size_t k = 0; k < phis.size(); ++k) {
            const double pr = phis[k].re.at(y), pi = phis[k].im.at(y);
            for (int m = 0; m <= mmax; ++m) {
              xp[m][k] += w * (vals[m][0] * pr + vals[m][1] * pi);
              xm[m][k] += w * (vals[m][2] * pr + vals[m][3] * pi);
            }
          }
        };
        acc(F.phi_plus, R.xp_phi_plus, R.xm_phi_plus);
        acc(F.phi_minus, R.xp_phi_minus, R.xm_phi_minus);
      }
    }
  }
  return R;
}

}  // namespace detail

inline XiDirections build_xi(const ProfileFamily& F, double M) {
  const auto& gs = *F.gs;
  if (!(M >= 2.0)) throw Error("M-too-small", "cutoff scale must satisfy M >= 2");
  if (2 * M > gs.grid->rmax()) throw Error("grid-too-short", "2M must lie inside the grid");
  const int Lp = F.L_plus, Lm = F.L_minus;
  XiDirections X;
  X.M = M;
  X.L_plus = Lp;
  X.L_minus = Lm;

  const int mmax = 2 * std::max(Lp, Lm);
  std::vector<ComplexPair> Xp, Xm;  // (L~*)^m J chi Phi_{0,+}, (L~*)^m J chi Phi_{0,-}
  detail::cutoff_adjoint_powers(F, M, mmax, Xp, Xm);
  const detail::XiPairings T = detail::xi_pairings(F, M, std::max(Lp, Lm));

  X.pairing = T.xp_phi_minus[0][0];
  if (!(X.pairing > 1e-12)) throw Error("M-too-small", "pairing constant is not positive");
  const double P = X.pairing;

  // base pairings (J chi Phi_{0,+}, Phi_{n,s}) and (J chi Phi_{0,-}, Phi_{n,s})
  const auto& ap_plus = T.xp_phi_plus[0];
  const auto& am_plus = T.xm_phi_plus[0];
  const auto& ap_minus = T.xp_phi_minus[0];
  const auto& am_minus = T.xm_phi_minus[0];

  // Triangular recursion.  (J chi Phi_{0,-}, Phi_{0,+}) = -P fixes the sign of
  // the c_{k,+} update; (J chi Phi_{0,+}, Phi_{0,-}) = +P fixes c_{k,-}.
  auto solve = [&](double seed_plus, double seed_minus, std::vector<double>& cplus, std::vector<double>& cminus) {
    cplus.assign(Lp + 1, 0.0);
    cminus.assign(Lm + 1, 0.0);
    cplus[0] = seed_plus;
    cminus[0] = seed_minus;
    for (int k = 1; k <= std::max(Lp, Lm); ++k) {
      if (k <= Lp) {
        double rest = 0;
        for (int m = 0; m <= std::min(Lm, k - 1); ++m) rest += cminus[m] * ap_plus[k - m];
        for (int m = 0; m <= k - 1; ++m) rest += cplus[m] * am_plus[k - m];
        cplus[k] = rest / P;
      }
      if (k <= Lm) {
        double rest = 0;
        for (int m = 0; m <= k - 1; ++m) rest += cminus[m] * ap_minus[k - m];
        for (int m = 0; m <= k - 1; ++m) rest += cplus[m] * am_minus[k - m];
        cminus[k] = -rest / P;
      }
    }
  };
  solve(1.0, 0.0, X.cp_plus, X.cp_minus);
  solve(0.0, 1.0, X.cm_plus, X.cm_minus);

  auto combine = [&](const std::vector<double>& cplus, const std::vector<double>& cminus, int shift) {
    ComplexPair r = ComplexPair::zero(gs.grid, F.params.d);
    for (int m = 0; m <= Lm; ++m)
      if (cminus[m] != 0.0) r = r + cminus[m] * Xp[m + shift];
    for (int m = 0; m <= Lp; ++m)
      if (cplus[m] != 0.0) r = r + cplus[m] * Xm[m + shift];
    return r;
  };
  for (int k = 0; k <= Lp; ++k) X.adj_plus.push_back(combine(X.cp_plus, X.cp_minus, k));
  for (int k = 0; k <= Lm; ++k) X.adj_minus.push_back(combine(X.cm_plus, X.cm_minus, k));
  X.xi_plus = X.adj_plus[0];
  X.xi_minus = X.adj_minus[0];

  // (Phi_{j,s}, Xi) = sum_m c_m (X_m, Phi_{j,s}) with every pairing taken from
  // the accurate table, so the check exercises discrete adjointness of the
  // powers of L~* rather than the recursion's own bookkeeping.
  auto pair = [&](const std::vector<double>& cplus, const std::vector<double>& cminus,
                  const std::vector<std::vector<double>>& xp, const std::vector<std::vector<double>>& xm, int j) {
    double acc = 0;
    for (int m = 0; m <= Lm; ++m) acc += cminus[m] * xp[m][j];
    for (int m = 0; m <= Lp; ++m) acc += cplus[m] * xm[m][j];
    return acc;
  };
  for (int j = 0; j <= Lp; ++j) {
    X.plus_on_xi_plus.push_back(pair(X.cp_plus, X.cp_minus, T.xp_phi_plus, T.xm_phi_plus, j));
    X.plus_on_xi_minus.push_back(pair(X.cm_plus, X.cm_minus, T.xp_phi_plus, T.xm_phi_plus, j));
  }
  for (int j = 0; j <= Lm; ++j) {
    X.minus_on_xi_plus.push_back(pair(X.cp_plus, X.cp_minus, T.xp_phi_minus, T.xm_phi_minus, j));
    X.minus_on_xi_minus.push_back(pair(X.cm_plus, X.cm_minus, T.xp_phi_minus, T.xm_phi_minus, j));
  }
  return X;
}

// Largest off-diagonal pairing (L~^i Phi_{j,s}, Xi_{M,t}) relative to the
// pairing constant, using L~^i Phi_j = Phi_{j-i}; the diagonal must equal
// -P (plus) and +P (minus) for the seeds used in build_xi.
inline double biorthogonality_defect(const XiDirections& X) {
  const double P = X.pairing;
  double worst = 0;
  for (std::size_t j = 0; j < X.plus_on_xi_plus.size(); ++j) {
    const double target = (j == 0) ? -P : 0.0;
    worst = std::max(worst, std::abs(X.plus_on_xi_plus[j] - target));
    worst = std::max(worst, std::abs(X.plus_on_xi_minus[j]));
  }
  for (std::size_t j = 0; j < X.minus_on_xi_plus.size(); ++j) {
    const double target = (j == 0) ? P : 0.0;
    worst = std::max(worst, std::abs(X.minus_on_xi_minus[j] - target));
    worst = std::max(worst, std::abs(X.minus_on_xi_plus[j]));
  }
  return worst / P;
}

}  // namespace sclab
