#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "jet.hpp"
#include "linop.hpp"

namespace sclab {

struct ProfileConfig {
  std::vector<double> b;  // b[0] = b_1, ..., at most L_plus entries
  std::vector<double> a;  // a[0] = a_1, ..., at most L_minus entries
  double eta0 = 0.05;
  double B1_override = 0;  // > 0 replaces the scale b_1^{-(1+eta)/2}

  double b1() const { return b.empty() ? 0.0 : b[0]; }
  bool is_zero() const {
    for (double x : b)
      if (x != 0.0) return false;
    for (double x : a)
      if (x != 0.0) return false;
    return true;
  }
  double eta(int L_plus) const { return eta0 / std::max(L_plus, 1); }
  double B0() const { return 1.0 / std::sqrt(b1()); }
  double B1(int L_plus) const {
    if (B1_override > 0) return B1_override;
    if (is_zero()) return std::numeric_limits<double>::infinity();
    return std::pow(B0(), 1.0 + eta(L_plus));
  }
};

struct ApproxProfile {
  ComplexPair field;  // Q + chi_{B1} zeta
  ComplexPair zeta;   // sum b_k Phi_{k,+} + sum a_k Phi_{k,-}, not localized
  RadialField chi;    // chi(y / B1)
  double B1 = 0;
  ProfileConfig cfg;
  const ProfileFamily* family = nullptr;
};

namespace detail {

inline void check_config(const ProfileFamily& F, const ProfileConfig& cfg) {
  if (static_cast<int>(cfg.b.size()) > F.L_plus || static_cast<int>(cfg.a.size()) > F.L_minus)
    throw Error("invalid-config", "more b or a parameters than family members");
  if (!cfg.is_zero() && cfg.B1_override <= 0 && !(cfg.b1() > 0))
    throw Error("invalid-config", "b_1 must be positive for a nonzero profile");
}

// b and a padded with zeros to the family lengths.
inline std::vector<double> padded(const std::vector<double>& v, int n) {
  std::vector<double> r(n, 0.0);
  for (std::size_t i = 0; i < v.size() && static_cast<int>(i) < n; ++i) r[i] = v[i];
  return r;
}

}  // namespace detail

inline ApproxProfile assemble(const ProfileFamily& F, const ProfileConfig& cfg) {
  detail::check_config(F, cfg);
  const auto& gs = *F.gs;
  const GridPtr& grid = gs.grid;
  const int d = F.params.d;
  ApproxProfile A;
  A.cfg = cfg;
  A.family = &F;
  A.B1 = cfg.B1(F.L_plus);
  if (std::isfinite(A.B1) && 2 * A.B1 > grid->rmax())
    throw Error("grid-too-short", "cutoff scale 2 B1 lies beyond the grid");

  A.zeta = ComplexPair::zero(grid, d);
  for (std::size_t k = 0; k < cfg.b.size(); ++k)
    if (cfg.b[k] != 0.0) A.zeta = A.zeta + cfg.b[k] * F.phi_plus[k + 1];
  for (std::size_t k = 0; k < cfg.a.size(); ++k)
    if (cfg.a[k] != 0.0) A.zeta = A.zeta + cfg.a[k] * F.phi_minus[k + 1];

  A.chi = RadialField::sample(grid, d, [&](double y) { return std::isfinite(A.B1) ? smooth_step(y / A.B1) : 1.0; });
  A.field = ComplexPair{gs.Q, RadialField(grid, d)} + scale_by(A.chi, A.zeta);
  return A;
}

// ds of (b, a) under the frozen-parameter law, b and a padded to L_plus and L_minus.
inline void frozen_parameter_rates(double alpha, const std::vector<double>& b, const std::vector<double>& a,
                                   std::vector<double>& bs, std::vector<double>& as) {
  const double b1 = b.empty() ? 0.0 : b[0];
  bs.assign(b.size(), 0.0);
  as.assign(a.size(), 0.0);
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double k = j + 1.0;
    bs[j] = (j + 1 < b.size() ? b[j + 1] : 0.0) - (2 * k - alpha) * b1 * b[j];
  }
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double k = j + 1.0;
    as[j] = (j + 1 < a.size() ? a[j + 1] : 0.0) - 2 * k * b1 * a[j];
  }
}

// d_s Q~ - J[Delta Q~ + f(Q~)] + b_1 Lambda Q~ + J a_1 Q~ with f(u) = u |u|^{p-1}
// and (b, a) moving by the frozen-parameter law.  Delta Q + Q^p is removed
// analytically, so the residual of the unperturbed profile is exactly zero.
inline ComplexPair renormalized_residual(const ApproxProfile& prof) {
  const ProfileFamily& F = *prof.family;
  const auto& P = F.params;
  const auto& gs = *F.gs;
  const GridPtr& grid = gs.grid;
  const int d = P.d;
  const std::size_t n = grid->size();
  const auto& cfg = prof.cfg;
  const std::vector<double> b = detail::padded(cfg.b, F.L_plus), a = detail::padded(cfg.a, F.L_minus);
  const double b1 = b.empty() ? 0.0 : b[0];
  const double a1 = a.empty() ? 0.0 : a[0];

  ComplexPair res = ComplexPair::zero(grid, d);
  if (cfg.is_zero()) return res;

  const ComplexPair cz = scale_by(prof.chi, prof.zeta);
  const RadialField lap_re(grid, d, grid->laplacian(cz.re.v, d));
  const RadialField lap_im(grid, d, grid->laplacian(cz.im.v, d));
  const int half = static_cast<int>(std::round((P.p - 1) / 2));
  const auto& Qt = prof.field;

  std::vector<double> bs, as;
  frozen_parameter_rates(P.alpha, b, a, bs, as);
  ComplexPair ds = ComplexPair::zero(grid, d);
  for (int k = 0; k < F.L_plus; ++k)
    if (bs[k] != 0.0) ds = ds + bs[k] * F.phi_plus[k + 1];
  for (int k = 0; k < F.L_minus; ++k)
    if (as[k] != 0.0) ds = ds + as[k] * F.phi_minus[k + 1];
  ds = scale_by(prof.chi, ds);

  // d_s chi(y / B1) through B1 = b_1^{-(1+eta)/2}
  double dB1 = 0;
  if (cfg.B1_override <= 0 && std::isfinite(prof.B1) && b1 > 0)
    dB1 = -0.5 * (1.0 + cfg.eta(F.L_plus)) * prof.B1 / b1 * bs[0];

  const RadialField lre = detail::lambda_op(Qt.re, P.m), lim = detail::lambda_op(Qt.im, P.m);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = grid->y(i);
    const double re = Qt.re[i], im = Qt.im[i];
    const double mod2 = re * re + im * im;
    const double w = detail::ipow(mod2, half);
    const double qp = detail::ipow(gs.Q[i], P.p);
    const double Tre = lap_re[i] + w * re - qp, Tim = lap_im[i] + w * im;
    double chis = 0;
    if (dB1 != 0.0) chis = cutoff_jet(y, prof.B1, 1)[1] * (-y / prof.B1) * dB1;
    res.re[i] = ds.re[i] + chis * prof.zeta.re[i] + Tim + b1 * lre[i] - a1 * im;
    res.im[i] = ds.im[i] + chis * prof.zeta.im[i] - Tre + b1 * lim[i] + a1 * re;
  }
  return res;
}

// sqrt(int_0^{ymax} |r|^2 y^{d-1} / (1 + y^2)^{d/2} dy).  The weight makes the
// y^{-gamma} tail of the quadratic residual integrable uniformly in ymax.
inline double weighted_residual_norm(const ComplexPair& r, double ymax) {
  const auto& G = *r.grid();
  const int d = r.d();
  std::vector<double> f(r.re.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double y = G.y(i);
    f[i] = (r.re[i] * r.re[i] + r.im[i] * r.im[i]) / std::pow(1.0 + y * y, 0.5 * d);
  }
  return std::sqrt(G.integral_between(f, Parity::even, d - 1.0, 0.0, std::min(ymax, G.rmax())));
}

}  // namespace sclab
