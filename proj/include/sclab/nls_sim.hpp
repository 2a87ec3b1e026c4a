#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "param_flow.hpp"
#include "profiles.hpp"

namespace sclab {

using cplx = std::complex<double>;
using CField = std::vector<cplx>;

// ---------------------------------------------------------------------------
// Conservative radial Laplacian

// Finite-volume Laplacian on nodes r_0 = 0 < r_1 < ... with faces at the
// midpoints.  V L = -K where V holds the cell volumes and K is symmetric
// tridiagonal, so Crank-Nicolson is exactly unitary for sum V |u|^2.  The
// outer face carries the Robin flux robin * u_{n-1}.
struct FvLaplacian {
  std::vector<double> r, vol, cf;  // cf[i] = A_{i+1/2} / (r_{i+1} - r_i)
  double robin = 0;
  int d = 0;

  std::size_t size() const { return r.size(); }
  double diag(std::size_t i) const {
    double k = 0;
    if (i > 0) k += cf[i - 1];
    if (i + 1 < r.size()) k += cf[i];
    if (i + 1 == r.size()) k -= robin;
    return k;
  }
  // (K u)_i
  template <class T>
  std::vector<T> K(const std::vector<T>& u) const {
    const std::size_t n = r.size();
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      T acc = diag(i) * u[i];
      if (i > 0) acc -= cf[i - 1] * u[i - 1];
      if (i + 1 < n) acc -= cf[i] * u[i + 1];
      out[i] = acc;
    }
    return out;
  }
};

inline FvLaplacian make_fv(const std::vector<double>& r, int d) {
  const std::size_t n = r.size();
  if (n < 3 || r[0] != 0.0) throw Error("bad-grid", "finite-volume nodes must start at 0");
  FvLaplacian F;
  F.r = r;
  F.d = d;
  F.vol.resize(n);
  F.cf.resize(n - 1);
  auto face = [&](std::size_t i) { return 0.5 * (r[i] + r[i + 1]); };
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = i == 0 ? 0.0 : face(i - 1);
    const double hi = i + 1 < n ? face(i) : r[n - 1];
    F.vol[i] = (std::pow(hi, d) - std::pow(lo, d)) / d;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) F.cf[i] = std::pow(face(i), d - 1.0) / (r[i + 1] - r[i]);
  return F;
}

// Stationary solution of the discrete equation L_h Q + Q^p = 0 with Q_0 = 1,
// marched outward node by node.  The Robin coefficient of the returned
// operator is set so that the last cell is stationary too.
inline std::vector<double> discrete_ground_state(FvLaplacian& fv, double p) {
  const std::size_t n = fv.size();
  std::vector<double> Q(n);
  Q[0] = 1.0;
  Q[1] = Q[0] - fv.vol[0] * std::pow(Q[0], p) / fv.cf[0];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(Q[i] > 0)) throw Error("ground-state-failure", "discrete ground state lost positivity");
    Q[i + 1] = Q[i] + (fv.cf[i - 1] * (Q[i] - Q[i - 1]) - fv.vol[i] * std::pow(Q[i], p)) / fv.cf[i];
  }
  const std::size_t e = n - 1;
  fv.robin = (fv.cf[e - 1] * (Q[e] - Q[e - 1]) - fv.vol[e] * std::pow(Q[e], p)) / Q[e];
  return Q;
}

// ---------------------------------------------------------------------------
// Simulator

struct SimConfig {
  SupercriticalParams params;
  double grid_scale = 0.05;  // sinh-grid scale
  double grid_h = 0.01;
  double rmax = 100;
  double dt = 1e-3;          // step in the current rescaled units
  bool nonlinear = true;
  bool remesh = true;
  double remesh_lambda = 0.5;  // rescale once the focusing scale drops below this
  int remesh_cells = 8;        // ... or below this many cells
  double blowup_amplitude = 1e8;
  double dt_min = 1e-16;       // physical step floor
  long max_steps = 20000000;
  int sample_every = 10;
  double sigma = 0;            // Sobolev diagnostic order, 0 picks the middle of (s_c, d/2)
  int L_plus = 2;

  double sigma_value() const { return sigma > 0 ? sigma : 0.5 * (params.s_c + 0.5 * params.d); }
  int s_plus() const { return 2 * params.k_plus + 2 * L_plus + 1; }
  void validate() const {
    const double s = sigma_value();
    if (!(s > params.s_c && s < 0.5 * params.d))
      throw Error("invalid-config", "sigma must lie strictly between s_c and d/2");
    if (!(dt > 0) || !(rmax > 0) || !(grid_scale > 0) || !(grid_h > 0))
      throw Error("invalid-config", "grid and time step must be positive");
  }
};

// u_phys(t, r) = scale^{-m} u(r / scale); t is physical time.
struct SimState {
  double t = 0;
  double scale = 1;
  CField u;
  long steps = 0;
  int remeshes = 0;
};

enum class SimStatus { completed, stopped, focusing, breakdown };

inline const char* to_string(SimStatus s) {
  switch (s) {
    case SimStatus::completed: return "completed";
    case SimStatus::stopped: return "stopped";
    case SimStatus::focusing: return "focusing-singularity";
    case SimStatus::breakdown: return "numerical-breakdown";
  }
  return "?";
}

struct SimSample {
  double t = 0, lam = 0, mass = 0, energy = 0, umax = 0, scale = 1;
};

struct SimResult {
  SimStatus status = SimStatus::completed;
  std::string message;
  std::vector<SimSample> samples;
};

class Simulator {
 public:
  explicit Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    grid_ = Grid::make(cfg_.grid_scale, cfg_.grid_h, cfg_.rmax);
    fv_ = make_fv(grid_->y(), cfg_.params.d);
    Qh_ = discrete_ground_state(fv_, cfg_.params.p);
  }

  const SimConfig& config() const { return cfg_; }
  const GridPtr& grid() const { return grid_; }
  const FvLaplacian& laplacian() const { return fv_; }
  const std::vector<double>& ground_state() const { return Qh_; }

  SimState state_from(const std::function<cplx(double)>& u0) const {
    SimState s;
    s.u.resize(grid_->size());
    for (std::size_t i = 0; i < s.u.size(); ++i) s.u[i] = u0(grid_->y(i));
    return s;
  }

  // Physical field as a function of r; zero outside the simulated ball.
  std::function<cplx(double)> physical_field(const SimState& s) const {
    std::vector<double> re(s.u.size()), im(s.u.size());
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      re[i] = s.u[i].real();
      im[i] = s.u[i].imag();
    }
    const double m = cfg_.params.m, sc = s.scale, fac = std::pow(sc, -m);
    GridPtr g = grid_;
    return [g, re = std::move(re), im = std::move(im), sc, fac](double r) {
      const double y = std::abs(r) / sc;
      if (y > g->rmax()) return cplx(0.0, 0.0);
      return fac * cplx(g->interpolate(re, Parity::even, y), g->interpolate(im, Parity::even, y));
    };
  }

  // One Strang step N(dt/2) L(dt) N(dt/2) of size dt in rescaled units.
  void step(SimState& s, double dt) const {
    if (cfg_.nonlinear) rotate(s.u, 0.5 * dt);
    linear_step(s.u, dt);
    if (cfg_.nonlinear) rotate(s.u, 0.5 * dt);
    s.t += s.scale * s.scale * dt;
    ++s.steps;
  }

  // Crank-Nicolson for i u_t + Delta u = 0: (V + i dt/2 K) u+ = (V - i dt/2 K) u.
  void linear_step(CField& u, double dt) const {
    const std::size_t n = u.size();
    const cplx c(0.0, 0.5 * dt);
    CField rhs = fv_.K(u);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = fv_.vol[i] * u[i] - c * rhs[i];
    // Thomas algorithm, sub/super diagonal -c cf
    std::vector<cplx> cp(n), dp(n);
    cplx b0 = fv_.vol[0] + c * fv_.diag(0);
    cp[0] = -c * fv_.cf[0] / b0;
    dp[0] = rhs[0] / b0;
    for (std::size_t i = 1; i < n; ++i) {
      const cplx a = -c * fv_.cf[i - 1];
      const cplx b = fv_.vol[i] + c * fv_.diag(i) - a * cp[i - 1];
      cp[i] = i + 1 < n ? -c * fv_.cf[i] / b : cplx(0.0);
      dp[i] = (rhs[i] - a * dp[i - 1]) / b;
    }
    u[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) u[i] = dp[i] - cp[i] * u[i + 1];
  }

  // Rescale-and-restart: u_new(r) = mu^m u(mu r), so that the profile is
  // spread over the grid again.  Returns true if a remesh happened.
  bool maybe_remesh(SimState& s) const {
    if (!cfg_.remesh) return false;
    const double umax = max_abs(s.u);
    if (!(umax > 0)) return false;
    const double lam = std::pow(umax, -1.0 / cfg_.params.m);
    const bool few_cells = static_cast<int>(grid_->locate(std::min(lam, grid_->rmax()))) < cfg_.remesh_cells;
    if (!(lam < cfg_.remesh_lambda) && !few_cells) return false;
    const double mu = lam;
    const auto f = physical_field(SimState{0, 1.0, s.u, 0, 0});
    const double fac = std::pow(mu, cfg_.params.m);
    CField v(s.u.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fac * f(mu * grid_->y(i));
    s.u = std::move(v);
    s.scale *= mu;
    ++s.remeshes;
    return true;
  }

  double mass(const SimState& s) const {
    return std::pow(s.scale, cfg_.params.d - 2 * cfg_.params.m) * discrete_mass(s.u);
  }
  double energy(const SimState& s) const {
    return std::pow(s.scale, cfg_.params.d - 2 * cfg_.params.m - 2) * discrete_energy(s.u);
  }
  double discrete_mass(const CField& u) const {
    double acc = 0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += fv_.vol[i] * std::norm(u[i]);
    return acc;
  }
  double discrete_energy(const CField& u) const {
    const CField Ku = fv_.K(u);
    double kin = 0, pot = 0;
    const double p = cfg_.params.p;
    for (std::size_t i = 0; i < u.size(); ++i) {
      kin += (std::conj(u[i]) * Ku[i]).real();
      pot += fv_.vol[i] * std::pow(std::abs(u[i]), p + 1);
    }
    return 0.5 * kin - pot / (p + 1);
  }
  double lambda_estimate(const SimState& s) const {
    return s.scale * std::pow(max_abs(s.u), -1.0 / cfg_.params.m);
  }
  SimSample sample(const SimState& s) const {
    SimSample o;
    o.t = s.t;
    o.lam = lambda_estimate(s);
    o.mass = mass(s);
    o.energy = energy(s);
    o.umax = std::pow(s.scale, -cfg_.params.m) * max_abs(s.u);
    o.scale = s.scale;
    return o;
  }

  // Evolves to physical time t_end.  The observer is called after every step
  // and may return false to stop the run.
  SimResult evolve(SimState& s, double t_end,
                   const std::function<bool(const SimState&)>& observer = {}) const {
    SimResult R;
    R.samples.push_back(sample(s));
    long local = 0;
    while (s.t < t_end) {
      if (s.steps >= cfg_.max_steps) {
        R.status = SimStatus::stopped;
        R.message = "step limit reached";
        break;
      }
      double dt = cfg_.dt;
      const double phys = s.scale * s.scale * dt;
      if (phys < cfg_.dt_min) {
        R.status = SimStatus::focusing;
        R.message = "time step underflow";
        break;
      }
      if (s.t + phys > t_end) dt = (t_end - s.t) / (s.scale * s.scale);
      step(s, dt);
      ++local;
      const double umax = max_abs(s.u);
      if (!std::isfinite(umax)) {
        R.status = SimStatus::breakdown;
        R.message = "non-finite field";
        break;
      }
      if (std::pow(s.scale, -cfg_.params.m) * umax > cfg_.blowup_amplitude) {
        R.status = SimStatus::focusing;
        R.message = "amplitude threshold exceeded";
        R.samples.push_back(sample(s));
        break;
      }
      maybe_remesh(s);
      if (cfg_.sample_every > 0 && local % cfg_.sample_every == 0) R.samples.push_back(sample(s));
      if (observer && !observer(s)) {
        R.status = SimStatus::stopped;
        R.message = "stopped by observer";
        break;
      }
    }
    if (R.status == SimStatus::completed && (R.samples.empty() || R.samples.back().t != s.t))
      R.samples.push_back(sample(s));
    return R;
  }

  static double max_abs(const CField& u) {
    double m = 0;
    for (const auto& z : u) m = std::max(m, std::abs(z));
    return m;
  }

 private:
  void rotate(CField& u, double tau) const {
    const double q = cfg_.params.p - 1;
    for (auto& z : u) z *= std::polar(1.0, tau * std::pow(std::abs(z), q));
  }

  SimConfig cfg_;
  GridPtr grid_;
  FvLaplacian fv_;
  std::vector<double> Qh_;
};

// (mass, energy) of a physical state.
inline std::pair<double, double> conserved_quantities(const Simulator& sim, const SimState& s) {
  return {sim.mass(s), sim.energy(s)};
}

// Approximate homogeneous Sobolev norm ||(-Delta)^{sigma/2} u||: the
// Neumann finite-volume Laplacian on every stride-th node is diagonalized in
// the cell-volume inner product and the spectrum is raised to the power sigma.
// The eigenbasis depends only on the simulator grid, so it is built once.
class SobolevProxy {
 public:
  explicit SobolevProxy(const Simulator& sim, int stride = 4) : stride_(stride), P_(sim.config().params) {
    const auto& G = *sim.grid();
    std::vector<double> r;
    for (std::size_t i = 0; i < G.size(); i += stride) r.push_back(G.y(i));
    fv_ = make_fv(r, P_.d);
    const Eigen::Index n = static_cast<Eigen::Index>(r.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n), V = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      K(i, i) = fv_.diag(i);
      V(i, i) = fv_.vol[i];
      if (i + 1 < n) K(i, i + 1) = K(i + 1, i) = -fv_.cf[i];
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, V);
    mu_ = es.eigenvalues().cwiseMax(0.0);
    // rows of B map nodal values to V-orthonormal mode coefficients
    B_ = es.eigenvectors().transpose() * V;
  }

  double operator()(const SimState& s, double sigma) const {
    const Eigen::Index n = mu_.size();
    Eigen::VectorXd ur(n), ui(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      ur(i) = s.u[static_cast<std::size_t>(i) * stride_].real();
      ui(i) = s.u[static_cast<std::size_t>(i) * stride_].imag();
    }
    const Eigen::VectorXd cr = B_ * ur, ci = B_ * ui;
    double acc = 0;
    for (Eigen::Index k = 0; k < n; ++k)
      if (mu_(k) > 0) acc += std::pow(mu_(k), sigma) * (cr(k) * cr(k) + ci(k) * ci(k));
    return std::sqrt(std::pow(s.scale, P_.d - 2 * P_.m - 2 * sigma) * acc);
  }

 private:
  int stride_;
  SupercriticalParams P_;
  FvLaplacian fv_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd B_;
};

inline double sobolev_norm(const Simulator& sim, const SimState& s, double sigma, int stride = 4) {
  return SobolevProxy(sim, stride)(s, sigma);
}

// ---------------------------------------------------------------------------
// Modulation decomposition

struct ModulationGuess {
  double lam = 1, phase = 0;
  std::vector<double> b, a;
};

struct ModulationOptions {
  double tol = 1e-14;       // target for the scaled pairings
  double accept = 1e-9;     // a stalled iteration is still accepted below this
  int max_iter = 40;
  double fd_step = 1e-6;
  double B1_fallback = 0;   // cutoff scale when b_1 <= 0; 0 picks 2M
};

struct ModulationResult {
  double lam = 1, phase = 0;
  std::vector<double> b, a;
  int iterations = 0;
  double residual = 0;
  double eps_norm = 0;  // (int_0^{2M} |eps|^2 y^{d-1} dy)^{1/2}
};

namespace detail {

struct ModulationProblem {
  const ProfileFamily& F;
  const XiDirections& X;
  const std::function<cplx(double)>& u;
  double B1_fallback;
  std::size_t nb, na;
  std::vector<std::size_t> nodes;  // family-grid nodes with y <= 2M (plus a stencil margin)
  std::vector<double> row_scale;   // round-off size of each pairing, (|Q|, |D|) / P
  std::vector<ComplexPair> dual;   // adjoint directions times quadrature weights, / (P row_scale)

  void setup() {
    const auto& G = *F.gs->grid;
    for (std::size_t i = 0; i < G.size(); ++i) {
      nodes.push_back(i);
      if (G.y(i) > 2 * X.M && nodes.size() > 8 && G.y(i - 6) > 2 * X.M) break;
    }
    const std::vector<double> w = G.weights_between(Parity::even, F.params.d - 1.0, 0.0, 2 * X.M);
    auto add = [&](const ComplexPair& D) {
      double sc = 0;
      for (std::size_t i : nodes) sc += std::abs(w[i] * F.gs->Q[i]) * std::hypot(D.re[i], D.im[i]);
      sc /= std::abs(X.pairing);
      ComplexPair W = ComplexPair::zero(F.gs->grid, F.params.d);
      for (std::size_t i : nodes) {
        W.re[i] = w[i] * D.re[i] / (X.pairing * sc);
        W.im[i] = w[i] * D.im[i] / (X.pairing * sc);
      }
      row_scale.push_back(sc);
      dual.push_back(std::move(W));
    };
    for (const auto& D : X.adj_plus) add(D);
    for (const auto& D : X.adj_minus) add(D);
  }

  ProfileConfig config(const std::vector<double>& z) const {
    ProfileConfig c;
    c.b.assign(z.begin() + 2, z.begin() + 2 + nb);
    c.a.assign(z.begin() + 2 + nb, z.end());
    if (!c.is_zero() && !(c.b1() > 0)) c.B1_override = B1_fallback;
    return c;
  }

  // Q~_{b,a} is only needed on the support of the Xi directions, so it is
  // evaluated node by node here instead of through assemble().
  ComplexPair eps(const std::vector<double>& z) const {
    const double lam = std::exp(z[0]), ph = z[1];
    const ProfileConfig c = config(z);
    const double B1 = c.B1(F.L_plus);
    const auto& grid = F.gs->grid;
    ComplexPair e = ComplexPair::zero(grid, F.params.d);
    const double fac = std::pow(lam, F.params.m);
    const cplx rot = std::polar(1.0, -ph);
    for (std::size_t i : nodes) {
      const double y = grid->y(i);
      double zr = 0, zi = 0;
      for (std::size_t k = 0; k < c.b.size(); ++k) {
        zr += c.b[k] * F.phi_plus[k + 1].re[i];
        zi += c.b[k] * F.phi_plus[k + 1].im[i];
      }
      for (std::size_t k = 0; k < c.a.size(); ++k) {
        zr += c.a[k] * F.phi_minus[k + 1].re[i];
        zi += c.a[k] * F.phi_minus[k + 1].im[i];
      }
      const double chi = std::isfinite(B1) ? smooth_step(y / B1) : 1.0;
      const cplx v = fac * u(lam * y) * rot;
      e.re[i] = v.real() - (F.gs->Q[i] + chi * zr);
      e.im[i] = v.imag() - chi * zi;
    }
    return e;
  }

  std::vector<double> residual(const std::vector<double>& z) const {
    const ComplexPair e = eps(z);
    std::vector<double> out;
    for (const auto& W : dual) {
      double acc = 0;
      for (std::size_t i : nodes) acc += e.re[i] * W.re[i] + e.im[i] * W.im[i];
      out.push_back(acc);
    }
    return out;
  }
};

inline double norm2(const std::vector<double>& v) {
  double a = 0;
  for (double x : v) a += x * x;
  return std::sqrt(a);
}

}  // namespace detail

// Finds (lam, phase, b, a) with (eps, (L~*)^k Xi_{M,+-}) = 0 for every adjoint
// power carried by X, where eps(y) = lam^m u(lam y) e^{-i phase} - Q~_{b,a}(y),
// by damped Newton with a central-difference Jacobian.
inline ModulationResult modulation_decompose(const std::function<cplx(double)>& u, const ProfileFamily& F,
                                             const XiDirections& X, const ModulationGuess& guess,
                                             const ModulationOptions& opt = {}) {
  const std::size_t nb = X.L_plus, na = X.L_minus;
  if (static_cast<int>(nb) > F.L_plus || static_cast<int>(na) > F.L_minus)
    throw Error("invalid-config", "Xi directions exceed the profile family");
  detail::ModulationProblem prob{F, X, u, opt.B1_fallback > 0 ? opt.B1_fallback : 2 * X.M, nb, na, {}, {}};
  prob.setup();
  const auto& G = *F.gs->grid;

  std::vector<double> z{std::log(guess.lam), guess.phase};
  for (std::size_t k = 0; k < nb; ++k) z.push_back(k < guess.b.size() ? guess.b[k] : 0.0);
  for (std::size_t k = 0; k < na; ++k) z.push_back(k < guess.a.size() ? guess.a[k] : 0.0);
  const std::size_t n = z.size();

  auto safe_residual = [&](const std::vector<double>& w, std::vector<double>& r) {
    try {
      r = prob.residual(w);
      return std::isfinite(detail::norm2(r));
    } catch (const Error&) {
      return false;
    }
  };

  ModulationResult R;
  std::vector<double> g;
  if (!safe_residual(z, g)) throw Error("decomposition-lost", "initial guess is outside the profile range");
  double gn = detail::norm2(g);
  int it = 0;
  for (; it < opt.max_iter && gn > opt.tol; ++it) {
    Eigen::MatrixXd Jm(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      const double h = opt.fd_step * (j == 0 ? 1.0 : std::max(1.0, std::abs(z[j])));
      std::vector<double> zp = z, zm = z, gp, gm;
      zp[j] += h;
      zm[j] -= h;
      if (!safe_residual(zp, gp) || !safe_residual(zm, gm))
        throw Error("decomposition-lost", "residual undefined near the current iterate");
      for (std::size_t i = 0; i < n; ++i) Jm(i, j) = (gp[i] - gm[i]) / (2 * h);
    }
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs(i) = -g[i];
    const Eigen::VectorXd dz = Jm.fullPivLu().solve(rhs);
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
      std::vector<double> zt = z, gt;
      for (std::size_t i = 0; i < n; ++i) zt[i] += step * dz(i);
      if (safe_residual(zt, gt) && detail::norm2(gt) < gn) {
        z = zt;
        g = gt;
        gn = detail::norm2(gt);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (!(gn <= std::max(opt.tol, opt.accept)))
    throw Error("decomposition-lost", "Newton iteration did not converge");

  R.lam = std::exp(z[0]);
  R.phase = z[1];
  R.b.assign(z.begin() + 2, z.begin() + 2 + nb);
  R.a.assign(z.begin() + 2 + nb, z.end());
  R.iterations = it;
  R.residual = gn;
  const ComplexPair e = prob.eps(z);
  std::vector<double> f(G.size(), 0.0);
  for (std::size_t i : prob.nodes) f[i] = e.re[i] * e.re[i] + e.im[i] * e.im[i];
  R.eps_norm = std::sqrt(G.integral_between(f, Parity::even, F.params.d - 1.0, 0.0, 2 * X.M));
  return R;
}

// lam^{-m} Q~_{b,a}(r / lam) e^{i phase} as a function of r.
inline std::function<cplx(double)> modulated_profile(const ApproxProfile& prof, double lam, double phase) {
  const auto& grid = prof.field.grid();
  const double m = prof.family->params.m, fac = std::pow(lam, -m);
  const cplx rot = std::polar(1.0, phase);
  const std::vector<double> re = prof.field.re.v, im = prof.field.im.v;
  const double c_inf = prof.family->params.c_inf;
  return [grid, re, im, fac, rot, lam, m, c_inf](double r) {
    const double y = std::abs(r) / lam;
    if (y > grid->rmax()) return fac * c_inf * std::pow(y, -m) * rot;
    return fac * cplx(grid->interpolate(re, Parity::even, y), grid->interpolate(im, Parity::even, y)) * rot;
  };
}

// ---------------------------------------------------------------------------
// One-unstable-mode shooting

struct BisectionResult {
  double lo = 0, hi = 0, best = 0;
  int evaluations = 0;
  bool converged = false;
  bool budget_exhausted = false;
  bool bracket_failed = false;
};

// Bisection on a coordinate v whose exit sign f(v) in {-1, +1} flips across
// the stable manifold; f(v) = 0 means "no exit within the horizon" and ends
// the search at that point.
inline BisectionResult bisect_exit_sign(const std::function<int(double)>& f, double lo, double hi, double tol,
                                        int max_eval, double max_seconds = std::numeric_limits<double>::infinity()) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  BisectionResult B;
  B.lo = lo;
  B.hi = hi;
  const int flo = f(lo), fhi = f(hi);
  B.evaluations = 2;
  if (flo == 0 || fhi == 0 || flo == fhi) {
    B.bracket_failed = flo != 0 && fhi != 0;
    B.best = flo == 0 ? lo : (fhi == 0 ? hi : 0.5 * (lo + hi));
    B.converged = flo == 0 || fhi == 0;
    return B;
  }
  while (B.hi - B.lo > tol) {
    if (B.evaluations >= max_eval || elapsed() > max_seconds) {
      B.budget_exhausted = true;
      break;
    }
    const double mid = 0.5 * (B.lo + B.hi);
    const int fm = f(mid);
    ++B.evaluations;
    if (fm == 0) {
      B.lo = B.hi = mid;
      break;
    }
    (fm == flo ? B.lo : B.hi) = mid;
  }
  B.best = 0.5 * (B.lo + B.hi);
  B.converged = !B.budget_exhausted;
  return B;
}

// ODE surrogate: the exit sign of the unstable mode coordinate V_j along the
// parameter flow started from the explicit orbit perturbed by V_j(s0) = v.
inline int ode_exit_sign(const LinearizationData& L, int mode, double s0, double v, double bound, double s_end,
                         int L_plus, int L_minus) {
  Eigen::VectorXd V = Eigen::VectorXd::Zero(L.ell), A = Eigen::VectorXd::Zero(L.k_ell);
  V(mode) = v;
  const ParamState x0 = state_from_modes(L, s0, V, A, L_plus, L_minus);
  int sign = 0;
  IntegrateOptions opt;
  opt.tol = 1e-12;
  opt.samples = 2000;
  opt.stop = [&](const ParamState& x) {
    const double Vm = mode_coordinates(L, x).V(mode);
    if (std::abs(Vm) > bound) {
      sign = Vm > 0 ? 1 : -1;
      return true;
    }
    return false;
  };
  try {
    integrate(L.alpha, x0, s_end, opt);
  } catch (const Error&) {
    if (sign == 0) throw;
  }
  return sign;
}

struct ShootConfig {
  SimConfig sim;
  int ell = 2;
  double s0 = 200;              // large enough that 2M < B1 along the explicit orbit
  double lam0 = 1;
  double v_lo = -1, v_hi = 1;   // bracket for the unstable coordinate at s0
  double bound = 1.0;           // trapped-regime proxy |V_k| <= bound
  double s_factor = 4;          // horizon s0 * s_factor in renormalized time
  double lam_target = 0.02;     // stop once lam falls below this fraction of lam0
  double M = 4;
  double family_rmax = 2e3;
  int decompose_every = 50;
  int max_runs = 12;
  double max_seconds = 900;
  double coord_tol = 1e-6;
};

struct ShootRun {
  double v = 0;
  int exit_sign = 0;        // sign of the unstable coordinate at exit, 0 if none
  double trapping_time = 0; // s_exit - s0
  double lam_drop = 1;      // lam0 / lam at the end
  std::string status;
  std::vector<double> t, s, lam, b1;
  std::vector<double> v_unstable;  // unstable mode coordinate at each decomposition
};

struct ShootResult {
  std::vector<ShootRun> runs;
  double best_v = 0;
  double best_trapping_time = 0;
  bool budget_exhausted = false;
  bool bracket_failed = false;  // both ends of the bracket exit on the same side
  bool rate_recovered = false;
  double lam_drop = 1;
  double rate_exponent = std::numeric_limits<double>::quiet_NaN();
  double expected_exponent = 0;
  std::string message;
};

// One PDE run from lam0^{-m} Q~_{b(s0) + delta}(r / lam0), delta putting v in
// the unstable mode coordinate.  The modulation parameters are recomputed every
// few steps; the run ends when the unstable coordinate leaves [-bound, bound],
// when lam has dropped to lam_target, at the horizon, or on a solver event.
inline ShootRun shoot_once(const ShootConfig& C, const ProfileFamily& F, const XiDirections& X,
                           const LinearizationData& L, const Simulator& sim, int mode, double v) {
  ShootRun run;
  run.v = v;
  Eigen::VectorXd V = Eigen::VectorXd::Zero(L.ell), A = Eigen::VectorXd::Zero(L.k_ell);
  V(mode) = v;
  const ParamState x0 = state_from_modes(L, C.s0, V, A, F.L_plus, F.L_minus);
  ProfileConfig pc;
  pc.b = x0.b;
  pc.a.assign(F.L_minus, 0.0);
  const ApproxProfile prof = assemble(F, pc);
  SimState st = sim.state_from(modulated_profile(prof, C.lam0, 0.0));

  ModulationGuess guess{C.lam0, 0.0, pc.b, pc.a};
  double s = C.s0, t_last = 0, lam_last = C.lam0;
  bool exited = false;
  auto record = [&](const ModulationResult& r) {
    run.t.push_back(st.t);
    run.s.push_back(s);
    run.lam.push_back(r.lam);
    run.b1.push_back(r.b.empty() ? 0.0 : r.b[0]);
    ParamState x;
    x.s = s;
    x.b = r.b;
    x.a = r.a;
    run.v_unstable.push_back(mode_coordinates(L, x).V(mode));
  };
  try {
    const ModulationResult r0 = modulation_decompose(sim.physical_field(st), F, X, guess);
    record(r0);
    guess = {r0.lam, r0.phase, r0.b, r0.a};
  } catch (const Error& e) {
    run.status = e.code();
    return run;
  }
  long counter = 0;
  auto observer = [&](const SimState& cur) {
    if (++counter % C.decompose_every) return true;
    ModulationResult r;
    try {
      r = modulation_decompose(sim.physical_field(cur), F, X, guess);
    } catch (const Error& e) {
      run.status = e.code();
      return false;
    }
    // ds = dt / lam^2, trapezoid in t
    s += (cur.t - t_last) * 0.5 * (1 / (lam_last * lam_last) + 1 / (r.lam * r.lam));
    t_last = cur.t;
    lam_last = r.lam;
    guess = {r.lam, r.phase, r.b, r.a};
    record(r);
    const double Vm = run.v_unstable.back();
    if (std::abs(Vm) > C.bound) {
      run.exit_sign = Vm > 0 ? 1 : -1;
      exited = true;
      return false;
    }
    if (r.lam < C.lam_target * C.lam0) return false;
    return s < C.s0 * C.s_factor;
  };
  const SimResult res = sim.evolve(st, std::numeric_limits<double>::infinity(), observer);
  if (run.status.empty()) run.status = exited ? "exit" : to_string(res.status);
  run.trapping_time = s - C.s0;
  run.lam_drop = run.lam.empty() ? 1.0 : C.lam0 / run.lam.back();
  return run;
}

inline ShootResult shooting_search(const ShootConfig& C, const ProfileFamily& F, const XiDirections& X) {
  const auto& P = F.params;
  const AdmissibilityReport adm = admissibility(P, C.ell);
  if (!adm.ell_ok) throw Error("invalid-config", "ell must exceed alpha/2");
  if (adm.unstable_count != 1) throw Error("invalid-config", "shooting supports exactly one unstable mode");
  if (F.L_plus < C.ell) throw Error("invalid-config", "profile family must have L_plus >= ell");
  const LinearizationData L = linearization(P.alpha, C.ell);
  int mode = -1;
  for (int j = 0; j < L.ell; ++j)
    if (L.D(j) > 0) mode = j;
  SimConfig sc = C.sim;
  sc.params = P;
  const Simulator sim(sc);

  ShootResult R;
  R.expected_exponent = C.ell / P.alpha;
  auto f = [&](double v) {
    ShootRun run = shoot_once(C, F, X, L, sim, mode, v);
    R.runs.push_back(run);
    return run.exit_sign;
  };
  const BisectionResult B = bisect_exit_sign(f, C.v_lo, C.v_hi, C.coord_tol, C.max_runs, C.max_seconds);
  R.budget_exhausted = B.budget_exhausted;
  R.bracket_failed = B.bracket_failed;
  const ShootRun* best = nullptr;
  for (const auto& r : R.runs)
    if (!best || r.trapping_time > best->trapping_time) best = &r;
  if (best) {
    R.best_v = best->v;
    R.best_trapping_time = best->trapping_time;
    R.lam_drop = best->lam_drop;
    if (best->lam_drop >= 10 && best->t.size() >= 5) {
      try {
        const BlowupFit fit = blowup_fit(best->t, best->lam, 1.0);
        R.rate_exponent = fit.exponent;
        R.rate_recovered = std::abs(fit.exponent / R.expected_exponent - 1) <= 0.2;
      } catch (const Error& e) {
        R.message = e.what();
      }
    }
  }
  if (R.message.empty()) {
    if (R.rate_recovered)
      R.message = "rate recovered";
    else if (R.bracket_failed)
      R.message = "no sign change of the unstable coordinate across the bracket; best trapping time reported";
    else
      R.message = "best trapping time reported; rate not recovered";
  }
  return R;
}

}  // namespace sclab
