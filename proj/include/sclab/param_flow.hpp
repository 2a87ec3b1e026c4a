#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include "numerology.hpp"

namespace sclab {

struct ParamState {
  double s = 0;      // renormalized time
  double t = 0;      // original time
  double lam = 1;    // scale
  double phase = 0;
  std::vector<double> b;  // b[0] = b_1
  std::vector<double> a;  // a[0] = a_1
};

// d/ds of every component of a ParamState (the s entry is always 1).
struct ParamRates {
  double t = 0, lam = 0, phase = 0;
  std::vector<double> b, a;
};

inline ParamRates rhs(double alpha, const ParamState& x) {
  ParamRates r;
  const double b1 = x.b.empty() ? 0.0 : x.b[0];
  r.b.resize(x.b.size());
  r.a.resize(x.a.size());
  for (std::size_t j = 0; j < x.b.size(); ++j) {
    const double k = j + 1.0;
    r.b[j] = (j + 1 < x.b.size() ? x.b[j + 1] : 0.0) - (2 * k - alpha) * b1 * x.b[j];
  }
  for (std::size_t j = 0; j < x.a.size(); ++j) {
    const double k = j + 1.0;
    r.a[j] = (j + 1 < x.a.size() ? x.a[j + 1] : 0.0) - 2 * k * b1 * x.a[j];
  }
  r.lam = -b1 * x.lam;
  r.phase = x.a.empty() ? 0.0 : x.a[0];
  r.t = x.lam * x.lam;
  return r;
}

inline ParamRates rhs(const SupercriticalParams& P, const ParamState& x) { return rhs(P.alpha, x); }

// b_j = c_j / s^j, a = 0, with lam = 1, t = 0 and phase = 0 at the given s.
inline ParamState explicit_solution(double alpha, int ell, double s, int L_plus, int L_minus) {
  if (!(s > 0)) throw Error("invalid-time", "explicit solution needs s > 0");
  if (L_plus < ell) throw Error("invalid-config", "L_plus must be at least ell");
  const auto c = bk_coefficients(alpha, ell);
  ParamState x;
  x.s = s;
  x.b.assign(L_plus, 0.0);
  x.a.assign(std::max(L_minus, 0), 0.0);
  for (int j = 1; j <= ell; ++j) x.b[j - 1] = c[j - 1] / std::pow(s, j);
  return x;
}

inline ParamState explicit_solution(const SupercriticalParams& P, int ell, double s, int L_plus, int L_minus) {
  return explicit_solution(P.alpha, ell, s, L_plus, L_minus);
}

// max_j |rhs_b - d b^e_j / ds| on the explicit orbit, relative to max_j |d b^e_j / ds|.
inline double explicit_residual(double alpha, int ell, double s, int L_plus) {
  const ParamState x = explicit_solution(alpha, ell, s, L_plus, 0);
  const ParamRates r = rhs(alpha, x);
  const auto c = bk_coefficients(alpha, ell);
  double worst = 0, scale = 0;
  for (int j = 1; j <= L_plus; ++j) {
    const double exact = j <= ell ? -j * c[j - 1] / std::pow(s, j + 1) : 0.0;
    worst = std::max(worst, std::abs(r.b[j - 1] - exact));
    scale = std::max(scale, std::abs(exact));
  }
  return worst / scale;
}

struct Trajectory {
  std::vector<ParamState> states;
  bool blowup_reached = false;
  bool stopped = false;  // ended by IntegrateOptions::stop
};

struct IntegrateOptions {
  double tol = 1e-12;
  int samples = 200;        // geometric in s between s0 and s_end
  double lam_floor = 0;     // stop with blowup_reached once lam drops below
  std::function<bool(const ParamState&)> stop;  // checked at every sample; true ends the run
};

namespace detail {

// Packed state [t, log lam, phase, s^j b_j..., s^j a_j...] in tau = log s.  In
// these variables the flow is autonomous and the explicit orbit is a fixed
// point, so integration error is not fed into its unstable directions.
inline std::vector<double> pack(const ParamState& x) {
  std::vector<double> v{x.t, std::log(x.lam), x.phase};
  for (std::size_t j = 0; j < x.b.size(); ++j) v.push_back(x.b[j] * std::pow(x.s, j + 1.0));
  for (std::size_t j = 0; j < x.a.size(); ++j) v.push_back(x.a[j] * std::pow(x.s, j + 1.0));
  return v;
}

inline ParamState unpack(const std::vector<double>& v, double tau, std::size_t nb, std::size_t na) {
  ParamState x;
  x.s = std::exp(tau);
  x.t = v[0];
  x.lam = std::exp(v[1]);
  x.phase = v[2];
  for (std::size_t j = 0; j < nb; ++j) x.b.push_back(v[3 + j] * std::exp(-(j + 1.0) * tau));
  for (std::size_t j = 0; j < na; ++j) x.a.push_back(v[3 + nb + j] * std::exp(-(j + 1.0) * tau));
  return x;
}

}  // namespace detail

// Adaptive Fehlberg 7(8) in tau = log s on the scaled state above.  lam is
// carried as log lam so that deep focusing never underflows.
inline Trajectory integrate(double alpha, const ParamState& x0, double s_end, const IntegrateOptions& opt = {}) {
  namespace ode = boost::numeric::odeint;
  if (!(s_end > x0.s) || !(x0.s > 0)) throw Error("invalid-time", "integrate needs 0 < s0 < s_end");
  if (!(x0.lam > 0)) throw Error("invalid-state", "lam must be positive");
  const std::size_t nb = x0.b.size(), na = x0.a.size();
  using state = std::vector<double>;
  auto sys = [&](const state& v, state& dv, double tau) {
    dv.resize(v.size());
    const double B1 = nb ? v[3] : 0.0;
    dv[0] = std::exp(tau + 2 * v[1]);
    dv[1] = -B1;
    dv[2] = na ? v[3 + nb] : 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      const double k = j + 1.0;
      dv[3 + j] = k * v[3 + j] + (j + 1 < nb ? v[4 + j] : 0.0) - (2 * k - alpha) * B1 * v[3 + j];
    }
    for (std::size_t j = 0; j < na; ++j) {
      const double k = j + 1.0, A = v[3 + nb + j];
      dv[3 + nb + j] = k * A + (j + 1 < na ? v[4 + nb + j] : 0.0) - 2 * k * B1 * A;
    }
  };
  const double tau0 = std::log(x0.s), tau1 = std::log(s_end);
  std::vector<double> times;
  const int n = std::max(opt.samples, 2);
  for (int i = 0; i < n; ++i) times.push_back(tau0 + (tau1 - tau0) * i / (n - 1));
  times.back() = tau1;

  Trajectory T;
  state v = detail::pack(x0);
  auto stepper = ode::make_controlled(opt.tol, opt.tol, ode::runge_kutta_fehlberg78<state>());
  const double log_floor = opt.lam_floor > 0 ? std::log(opt.lam_floor) : -std::numeric_limits<double>::infinity();
  struct Stop {};
  try {
    ode::integrate_times(stepper, sys, v, times.begin(), times.end(), (times[1] - times[0]) * 1e-2,
                         [&](const state& w, double tau) {
                           for (double c : w)
                             if (!std::isfinite(c)) throw Error("integration-failure", "parameter flow left the finite range");
                           ParamState x = detail::unpack(w, tau, nb, na);
                           if (tau == tau1) x.s = s_end;
                           T.states.push_back(std::move(x));
                           if (w[1] < log_floor) throw Stop{};
                           if (opt.stop && opt.stop(T.states.back())) {
                             T.stopped = true;
                             throw Stop{};
                           }
                         });
  } catch (const Stop&) {
    T.blowup_reached = !T.stopped;
  } catch (const ode::step_adjustment_error&) {
    throw Error("integration-failure", "step size collapsed in the parameter flow");
  }
  return T;
}

inline Trajectory integrate(const SupercriticalParams& P, const ParamState& x0, double s_end,
                            const IntegrateOptions& opt = {}) {
  return integrate(P.alpha, x0, s_end, opt);
}

// ---------------------------------------------------------------------------
// Linearization around the explicit orbit

struct LinearizationData {
  int ell = 0;
  double alpha = 0;
  int k_ell = 0;
  double delta_ell = 0;
  Eigen::MatrixXd M;      // ell x ell
  Eigen::VectorXd D;      // numeric eigenvalues, ascending
  Eigen::MatrixXd P;      // V = P U diagonalizes: P M P^{-1} = diag(D)
  Eigen::MatrixXd Mcal;   // k_ell x k_ell
  Eigen::VectorXd Dcal;
  Eigen::MatrixXd Qcal;   // A~ = Qcal A diagonalizes Mcal the same way
  std::vector<double> D_closed, Dcal_closed;
  double spectrum_error = 0, spectrum_error_cal = 0;
};

namespace detail {

// Eigen-decomposition of a real matrix with simple real spectrum.  The
// eigenvalues are polished by Newton steps on det(A - x I) and returned
// ascending; the rows of P are the matching left eigenvectors.
inline void real_diagonalize(const Eigen::MatrixXd& A, Eigen::VectorXd& D, Eigen::MatrixXd& P) {
  const Eigen::Index n = A.rows();
  D.resize(n);
  P.resize(n, n);
  if (n == 0) return;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw Error("eigen-failure", "eigen-solver did not converge");
  std::vector<std::pair<double, Eigen::Index>> order;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(es.eigenvalues()(i).imag()) > 1e-8 * (1 + std::abs(es.eigenvalues()(i).real())))
      throw Error("eigen-failure", "complex eigenvalue where a real spectrum was expected");
    order.push_back({es.eigenvalues()(i).real(), i});
  }
  std::sort(order.begin(), order.end());
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // Newton on det(A - x I): d/dx log det = -tr((A - x I)^{-1})
    double x = order[j].first;
    for (int it = 0; it < 4; ++it) {
      const Eigen::MatrixXd S = A - x * Eigen::MatrixXd::Identity(n, n);
      const auto lu = S.fullPivLu();
      if (!lu.isInvertible()) break;
      const double tr = lu.inverse().trace();
      if (!std::isfinite(tr) || tr == 0.0) break;
      const double step = 1.0 / tr;
      x += step;
      if (std::abs(step) < 1e-16 * (1 + std::abs(x))) break;
    }
    D(j) = x;
    R.col(j) = es.eigenvectors().col(order[j].second).real().normalized();
  }
  P = R.inverse();
}

}  // namespace detail

inline LinearizationData linearization(double alpha, int ell) {
  if (!(ell > 0.5 * alpha)) throw Error("ell-too-small", "linearization needs ell > alpha/2");
  LinearizationData L;
  L.ell = ell;
  L.alpha = alpha;
  const auto c = bk_coefficients(alpha, ell);
  const double den = 2.0 * ell - alpha;
  L.M = Eigen::MatrixXd::Zero(ell, ell);
  L.M(0, 0) = alpha * (ell - 1) / den - (2 - alpha) * c[0];
  for (int i = 1; i < ell; ++i) {
    L.M(i, 0) = -(2.0 * (i + 1) - alpha) * c[i];
    L.M(i, i) = alpha * (ell - i - 1.0) / den;
  }
  for (int i = 0; i + 1 < ell; ++i) L.M(i, i + 1) = 1.0;
  detail::real_diagonalize(L.M, L.D, L.P);
  L.D_closed.push_back(-1.0);
  for (int j = 2; j <= ell; ++j) L.D_closed.push_back(j * alpha / den);
  std::sort(L.D_closed.begin(), L.D_closed.end());
  for (int j = 0; j < ell; ++j) L.spectrum_error = std::max(L.spectrum_error, std::abs(L.D(j) - L.D_closed[j]));

  detail::split_floor(ell - 0.5 * alpha, L.k_ell, L.delta_ell);
  const int k = L.k_ell;
  L.Mcal = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    L.Mcal(i, i) = -alpha / den * ((i + 1.0) - (L.k_ell + L.delta_ell));
    if (i + 1 < k) L.Mcal(i, i + 1) = 1.0;
    L.Dcal_closed.push_back(L.Mcal(i, i));
  }
  std::sort(L.Dcal_closed.begin(), L.Dcal_closed.end());
  detail::real_diagonalize(L.Mcal, L.Dcal, L.Qcal);
  for (int j = 0; j < k; ++j)
    L.spectrum_error_cal = std::max(L.spectrum_error_cal, std::abs(L.Dcal(j) - L.Dcal_closed[j]));
  return L;
}

// det(M_ell - X I) at X, by LU.  Used to cross-check the closed-form
// characteristic polynomial.
inline double characteristic_value(const LinearizationData& L, double X) {
  const auto n = L.M.rows();
  return (L.M - X * Eigen::MatrixXd::Identity(n, n)).determinant();
}

struct ModeCoordinates {
  Eigen::VectorXd U, V, A, Atilde;
};

// U_k = s^k (b_k - b_k^e), V = P U, A_k = s^{k + alpha/2} a_k, A~ = Qcal A.
inline ModeCoordinates mode_coordinates(const LinearizationData& L, const ParamState& x) {
  ModeCoordinates C;
  const auto c = bk_coefficients(L.alpha, L.ell);
  C.U.resize(L.ell);
  for (int k = 1; k <= L.ell; ++k) {
    const double bk = k <= static_cast<int>(x.b.size()) ? x.b[k - 1] : 0.0;
    C.U(k - 1) = std::pow(x.s, k) * (bk - c[k - 1] / std::pow(x.s, k));
  }
  C.V = L.P * C.U;
  C.A.resize(L.k_ell);
  for (int k = 1; k <= L.k_ell; ++k) {
    const double ak = k <= static_cast<int>(x.a.size()) ? x.a[k - 1] : 0.0;
    C.A(k - 1) = std::pow(x.s, k + 0.5 * L.alpha) * ak;
  }
  C.Atilde = L.Qcal * C.A;
  return C;
}

// Inverse of mode_coordinates for the b and a entries it covers; the others
// keep the explicit-solution values.
inline ParamState state_from_modes(const LinearizationData& L, double s, const Eigen::VectorXd& V,
                                   const Eigen::VectorXd& Atilde, int L_plus, int L_minus) {
  ParamState x = explicit_solution(L.alpha, L.ell, s, L_plus, L_minus);
  const Eigen::VectorXd U = L.P.inverse() * V;
  for (int k = 1; k <= L.ell; ++k) x.b[k - 1] += U(k - 1) / std::pow(s, k);
  if (L.k_ell > 0 && Atilde.size() == L.k_ell) {
    const Eigen::VectorXd A = L.Qcal.inverse() * Atilde;
    for (int k = 1; k <= L.k_ell && k <= L_minus; ++k) x.a[k - 1] = A(k - 1) / std::pow(s, k + 0.5 * L.alpha);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Blow-up law

struct BlowupFit {
  double T = 0;
  double exponent = 0;
  double prefactor = 0;
  double rms = 0;           // rms residual of the log-log regression
  std::size_t points = 0;
};

// Fits lam = c (T - t)^e over the last `decades` decades of lam.  T is found
// by Brent minimization of the regression residual, so the exponent is not
// presupposed.
inline BlowupFit blowup_fit(const std::vector<double>& t, const std::vector<double>& lam, double decades = 1.0) {
  if (t.size() != lam.size() || t.size() < 5) throw Error("insufficient-data", "blowup_fit needs >= 5 samples");
  for (std::size_t i = 1; i < lam.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw Error("insufficient-data", "times must increase");
    if (lam[i] > lam[i - 1] * (1 + 1e-12)) throw Error("not-focusing", "lam is not monotone decreasing");
  }
  if (!(lam.front() >= 10 * lam.back() * (1 - 1e-12)))
    throw Error("not-focusing", "lam must decrease by at least a factor 10");
  const double cut = lam.back() * std::pow(10.0, decades);
  std::vector<double> ts, ls;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (lam[i] <= cut) {
      ts.push_back(t[i]);
      ls.push_back(std::log(lam[i]));
    }
  if (ts.size() < 5) throw Error("insufficient-data", "fewer than 5 samples in the fit window");
  const double tl = ts.back(), span = ts.back() - ts.front();

  auto regress = [&](double T, double& slope, double& icpt) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double X = std::log(T - ts[i]);
      sx += X; sy += ls[i]; sxx += X * X; sxy += X * ls[i];
    }
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    icpt = (sy - slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double e = ls[i] - icpt - slope * std::log(T - ts[i]);
      ss += e * e;
    }
    return ss / n;
  };
  auto cost = [&](double u) {
    double sl, ic;
    return regress(tl + std::exp(u), sl, ic);
  };
  // coarse scan for a bracket, then Brent
  const double ulo = std::log(span * 1e-12), uhi = std::log(span * 1e3);
  const int nscan = 200;
  int best = 0;
  double bestv = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= nscan; ++i) {
    const double v = cost(ulo + (uhi - ulo) * i / nscan);
    if (v < bestv) { bestv = v; best = i; }
  }
  const double du = (uhi - ulo) / nscan;
  const auto r = boost::math::tools::brent_find_minima(cost, ulo + std::max(best - 1, 0) * du,
                                                       ulo + std::min(best + 1, nscan) * du, 60);
  BlowupFit F;
  F.T = tl + std::exp(r.first);
  double sl, ic;
  F.rms = std::sqrt(regress(F.T, sl, ic));
  F.exponent = sl;
  F.prefactor = std::exp(ic);
  F.points = ts.size();
  return F;
}

inline BlowupFit blowup_fit(const Trajectory& tr, double decades = 1.0) {
  std::vector<double> t, l;
  for (const auto& x : tr.states) {
    t.push_back(x.t);
    l.push_back(x.lam);
  }
  return blowup_fit(t, l, decades);
}

}  // namespace sclab
