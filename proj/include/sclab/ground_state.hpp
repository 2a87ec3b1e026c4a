#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "numerology.hpp"
#include "radial_field.hpp"

namespace sclab {

struct TailFit {
  std::vector<double> exponents;
  std::vector<double> coeffs;    // least-squares coefficients for the hypotheses
  double leading_exponent = 0;   // free log-log slope over the window
  double prefactor = 0;          // exp(intercept) with the sign of the data
  double rel_rms = 0;            // relative rms misfit of the hypothesis fit
  std::size_t samples = 0;
};

// Least-squares fit of f against sum_i c_i y^{e_i} on [lo, hi], weighted by
// 1/|f| so that the misfit is relative, plus a free-exponent log-log fit.
inline TailFit tail_fit(const RadialField& f, const std::vector<double>& hyps, double lo, double hi) {
  if (!(lo > 0) || hi / lo < 10.0 * (1 - 1e-12))
    throw Error("bad-window", "tail window must satisfy r_hi / r_lo >= 10");
  if (hi > f.grid->rmax() * (1 + 1e-12)) throw Error("grid-too-short", "tail window beyond grid");
  std::vector<double> ys, fs;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double y = f.grid->y(i);
    if (y >= lo && y <= hi) {
      ys.push_back(y);
      fs.push_back(f.v[i]);
    }
  }
  const std::size_t n = ys.size();
  if (n < std::max<std::size_t>(4, hyps.size() + 2)) throw Error("degenerate-fit", "too few samples in window");
  TailFit T;
  T.exponents = hyps;
  T.samples = n;

  bool same_sign = true;
  for (double v : fs)
    if (v == 0.0 || (v > 0) != (fs[0] > 0)) same_sign = false;

  if (!hyps.empty()) {
    Eigen::MatrixXd A(n, hyps.size());
    Eigen::VectorXd b(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = (fs[i] != 0.0) ? 1.0 / std::abs(fs[i]) : 1.0;
      for (std::size_t j = 0; j < hyps.size(); ++j) A(i, j) = std::pow(ys[i], hyps[j]) * w;
      b(i) = fs[i] * w;
    }
    Eigen::VectorXd scale = A.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < A.cols(); ++j) A.col(j) /= scale(j);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-12 * sv(0)) throw Error("degenerate-fit", "ill-conditioned design matrix");
    Eigen::VectorXd c = svd.solve(b);
    T.coeffs.resize(hyps.size());
    for (std::size_t j = 0; j < hyps.size(); ++j) T.coeffs[j] = c(j) / scale(j);
    T.rel_rms = std::sqrt((A * c - b).squaredNorm() / static_cast<double>(n));
  }

  if (same_sign) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double X = std::log(ys[i]), Y = std::log(std::abs(fs[i]));
      sx += X; sy += Y; sxx += X * X; sxy += X * Y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    T.leading_exponent = slope;
    T.prefactor = std::copysign(std::exp((sy - slope * sx) / n), fs[0]);
  } else {
    T.leading_exponent = std::nan("");
    T.prefactor = std::nan("");
  }
  return T;
}

struct GroundState {
  SupercriticalParams params;
  GridPtr grid;
  RadialField Q;      // Q(y), Q(0) = 1
  RadialField dQ;     // Q'(y)
  RadialField LQ;     // Lambda Q = m Q + y Q'
  RadialField dLQ;    // (Lambda Q)'
  RadialField dev;    // Q - c_inf y^{-m}, accurate to relative precision in the tail
  double tol = 0;
  double c_inf_fit = 0, a1_fit = 0, gamma_fit = 0;
  double g = 0;       // remainder order min(alpha, sqrt(Discr))
};

struct Potentials {
  RadialField V_plus, V_minus;   // (log Lambda Q)', (log Q)'
  RadialField W_plus, W_minus;   // p Q^{p-1}, Q^{p-1}
};

namespace detail {

inline double ipow(double x, double p) {
  const double r = std::round(p);
  if (std::abs(p - r) < 1e-14 && r >= 0 && r < 64) {
    double acc = 1, b = x;
    for (long e = static_cast<long>(r); e > 0; e >>= 1) {
      if (e & 1) acc *= b;
      b *= b;
    }
    return acc;
  }
  return std::pow(x, p);
}

// v'' = -(d-2-2m) v' + K v - v^p written for w = v - c_inf with the linear and
// constant parts cancelled analytically.
inline double w_forcing(const SupercriticalParams& P, double w) {
  const double c = P.c_inf, K = P.c_pow;
  const double pr = std::round(P.p);
  if (std::abs(P.p - pr) > 1e-14) return K * (c + w) - std::pow(c + w, P.p);
  const int p = static_cast<int>(pr);
  double acc = -(p - 1.0) * K * w;
  double binom = p;  // C(p, 1)
  for (int j = 2; j <= p; ++j) {
    binom *= static_cast<double>(p - j + 1) / j;
    acc -= binom * ipow(c, p - j) * ipow(w, j);
  }
  return acc;
}

}  // namespace detail

inline GroundState solve_ground_state(const SupercriticalParams& P, GridPtr grid, double tol = 1e-10) {
  namespace ode = boost::numeric::odeint;
  using state = std::array<double, 2>;
  if (!(tol > 1e-14 && tol < 1e-6)) throw Error("bad-tolerance", "tol must lie in (1e-14, 1e-6)");
  if (grid->rmax() < 1e2) throw Error("grid-too-short", "ground state needs rmax >= 1e2");

  const int d = P.d;
  const double p = P.p, m = P.m, c = P.c_inf;
  const std::size_t n = grid->size();
  GroundState G;
  G.params = P;
  G.grid = grid;
  G.tol = tol;
  G.Q = RadialField(grid, d);
  G.dQ = RadialField(grid, d, Parity::odd);
  G.LQ = RadialField(grid, d);
  G.dLQ = RadialField(grid, d, Parity::odd);
  G.dev = RadialField(grid, d);
  G.g = std::min(P.alpha, std::sqrt(P.discr));

  const double rtol = tol * 1e-2;
  auto stepper = ode::make_controlled(1e-18, rtol, ode::runge_kutta_fehlberg78<state>());

  // stage 1: y in [y0, 1] with the even series start
  const double a2 = -1.0 / (2.0 * d);
  const double a4 = p / (8.0 * d * (d + 2.0));
  const double a6 = -(p * a4 + 0.5 * p * (p - 1.0) * a2 * a2) / (6.0 * (d + 4.0));
  const double y0 = std::min(1e-3, 0.5 * grid->y(1));
  state s{1 + a2 * y0 * y0 + a4 * std::pow(y0, 4) + a6 * std::pow(y0, 6),
          2 * a2 * y0 + 4 * a4 * std::pow(y0, 3) + 6 * a6 * std::pow(y0, 5)};
  auto rhs_y = [&](const state& x, state& dx, double y) {
    if (x[0] <= 0) throw Error("not-in-ground-branch", "Q changed sign");
    dx[0] = x[1];
    dx[1] = -(d - 1.0) / y * x[1] - detail::ipow(x[0], p);
  };
  std::size_t i1 = 0;
  while (i1 + 1 < n && grid->y(i1 + 1) <= 1.0) ++i1;
  G.Q[0] = 1.0;
  std::vector<double> times{y0};
  for (std::size_t i = 1; i <= i1; ++i) times.push_back(grid->y(i));
  std::size_t idx = 0;
  try {
    ode::integrate_times(stepper, rhs_y, s, times.begin(), times.end(), 1e-4,
                         [&](const state& x, double) {
                           if (idx > 0) {
                             G.Q[idx] = x[0];
                             G.dQ[idx] = x[1];
                           }
                           ++idx;
                         });
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("integration-failure", e.what());
  }
  for (std::size_t i = 0; i <= i1; ++i) {
    const double y = grid->y(i), Qi = G.Q[i], dQi = G.dQ[i];
    G.LQ[i] = m * Qi + y * dQi;
    G.dLQ[i] = (m + 2.0 - d) * dQi - y * detail::ipow(Qi, p);
    G.dev[i] = (i == 0) ? 0.0 : Qi - c * std::pow(y, -m);
  }

  // stage 2: t = log y on w = y^m Q - c_inf
  const double yb = grid->y(i1);
  const double vb = std::pow(yb, m) * G.Q[i1];
  state z{vb - c, std::pow(yb, m) * (m * G.Q[i1] + yb * G.dQ[i1])};
  const double damp = d - 2.0 - 2.0 * m;
  auto rhs_t = [&](const state& x, state& dx, double) {
    if (c + x[0] <= 0) throw Error("not-in-ground-branch", "Q changed sign");
    dx[0] = x[1];
    dx[1] = -damp * x[1] + detail::w_forcing(P, x[0]);
  };
  std::vector<double> ts;
  for (std::size_t i = i1; i < n; ++i) ts.push_back(std::log(grid->y(i)));
  idx = i1;
  auto stepper2 = ode::make_controlled(1e-300, rtol, ode::runge_kutta_fehlberg78<state>());
  try {
    ode::integrate_times(stepper2, rhs_t, z, ts.begin(), ts.end(), 1e-3, [&](const state& x, double) {
      if (idx > i1) {
        const double y = grid->y(idx), ym = std::pow(y, -m);
        const double wtt = -damp * x[1] + detail::w_forcing(P, x[0]);
        G.Q[idx] = ym * (c + x[0]);
        G.dQ[idx] = ym / y * (x[1] - m * (c + x[0]));
        G.LQ[idx] = ym * x[1];
        G.dLQ[idx] = ym / y * (wtt - m * x[1]);
        G.dev[idx] = ym * x[0];
      }
      ++idx;
    });
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("integration-failure", e.what());
  }

  for (std::size_t i = 1; i < n; ++i) {
    if (!(G.Q[i] > 0)) throw Error("not-in-ground-branch", "Q is not positive on the grid");
    if (!(G.dQ[i] < 0)) throw Error("not-in-ground-branch", "Q is not decreasing on the grid");
  }

  // tail metadata over the outermost decade
  const double hi = grid->rmax(), lo = hi / 10.0;
  G.c_inf_fit = tail_fit(G.Q, {-m}, lo, hi).coeffs[0];
  TailFit df = tail_fit(G.dev, {-P.tail_gamma}, lo, hi);
  G.a1_fit = df.coeffs[0];
  G.gamma_fit = -df.leading_exponent;
  return G;
}

inline GroundState solve_ground_state(const SupercriticalParams& P, double rmax, double tol = 1e-10, double h = 1e-3) {
  if (rmax < 1e3) throw Error("grid-too-short", "rmax must be at least 1e3");
  return solve_ground_state(P, Grid::make(1.0, h, rmax), tol);
}

inline RadialField lambda_q(const GroundState& gs) { return gs.LQ; }

// max |Q'' + (d-1)/y Q' + Q^p| / max |Q^p| over interior nodes.  Q'' is the
// grid derivative of the integrated Q' field, so the residual measures the
// first-order system the integrator solved and is not swamped by the 1/h^2
// round-off amplification of a second difference.
inline double ode_residual(const GroundState& gs) {
  const auto ddQ = gs.grid->derivative(gs.dQ.v, Parity::odd);
  const int d = gs.params.d;
  double r = 0, s = 0;
  for (std::size_t i = 0; i + 3 < ddQ.size(); ++i) {
    const double qp = detail::ipow(gs.Q[i], gs.params.p);
    const double lap = (i == 0) ? d * ddQ[0] : ddQ[i] + (d - 1.0) * gs.dQ[i] / gs.grid->y(i);
    r = std::max(r, std::abs(lap + qp));
    s = std::max(s, qp);
  }
  return r / s;
}

// Consistency of the stored Q' with the grid derivative of Q, relative to max |Q'|.
inline double derivative_consistency(const GroundState& gs) {
  const auto dq = gs.grid->derivative(gs.Q.v, Parity::even);
  double r = 0;
  for (std::size_t i = 0; i + 3 < dq.size(); ++i) r = std::max(r, std::abs(dq[i] - gs.dQ[i]));
  return r / gs.dQ.max_abs();
}

inline Potentials potentials(const GroundState& gs) {
  const auto& P = gs.params;
  Potentials V;
  V.V_plus = RadialField(gs.grid, P.d, Parity::odd);
  V.V_minus = RadialField(gs.grid, P.d, Parity::odd);
  V.W_plus = RadialField(gs.grid, P.d);
  V.W_minus = RadialField(gs.grid, P.d);
  for (std::size_t i = 0; i < gs.Q.size(); ++i) {
    V.V_plus[i] = gs.dLQ[i] / gs.LQ[i];
    V.V_minus[i] = gs.dQ[i] / gs.Q[i];
    V.W_minus[i] = detail::ipow(gs.Q[i], P.p - 1.0);
    V.W_plus[i] = P.p * V.W_minus[i];
  }
  return V;
}

// lambda^{m} Q(lambda y) resampled on the same grid; nodes with lambda y beyond
// rmax are left at zero and reported through the returned count.
inline RadialField rescale(const RadialField& f, double m, double lambda, std::size_t* valid = nullptr) {
  RadialField r(f.grid, f.d, f.parity);
  std::size_t k = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double yq = lambda * f.grid->y(i);
    if (yq > f.grid->rmax()) break;
    r[i] = std::pow(lambda, m) * f.at(yq);
    k = i + 1;
  }
  if (valid) *valid = k;
  return r;
}

}  // namespace sclab
