#include <gtest/gtest.h>

#include <cmath>

#include <sclab/nls_sim.hpp>

using namespace sclab;

namespace {

SimConfig base(double rmax = 60) {
  SimConfig c;
  c.params = derive_params(12, 7);
  c.grid_scale = 0.05;
  c.grid_h = 0.01;
  c.rmax = rmax;
  c.dt = 1e-3;
  c.remesh = false;
  return c;
}

cplx gauss_pair(double r) { return {std::exp(-r * r), 0.3 * std::exp(-r * r / 2)}; }

struct ModSetup {
  GroundState gs;
  ProfileFamily F;
  XiDirections X;
};

const ModSetup& mod_setup() {
  static const ModSetup* S = [] {
    auto* s = new ModSetup{solve_ground_state(derive_params(12, 7), 2e3, 1e-10), {}, {}};
    s->F = generate_phi_family(s->gs, potentials(s->gs), 3);
    s->X = build_xi(s->F, 10);
    return s;
  }();
  return *S;
}

// (int_0^{2M} Q^2 y^{d-1} dy)^{1/2}, the scale against which eps_norm is read
double q_norm(const ModSetup& S) {
  const auto q2 = mul(S.gs.Q, S.gs.Q);
  return std::sqrt(S.gs.grid->integral_between(q2.v, Parity::even, 11.0, 0.0, 2 * S.X.M));
}

}  // namespace

TEST(Simulator, ConfigValidation) {
  auto c = base();
  c.sigma = c.params.s_c - 0.1;
  EXPECT_THROW(Simulator{c}, Error);
  c = base();
  c.dt = 0;
  EXPECT_THROW(Simulator{c}, Error);
  c = base();
  EXPECT_GT(c.sigma_value(), c.params.s_c);
  EXPECT_LT(c.sigma_value(), 6.0);
  EXPECT_EQ(c.s_plus(), 2 * c.params.k_plus + 2 * c.L_plus + 1);
}

TEST(Simulator, ZeroFieldHasNoMassOrEnergy) {
  const Simulator sim(base());
  const auto s = sim.state_from([](double) { return cplx(0); });
  const auto [m, e] = conserved_quantities(sim, s);
  EXPECT_EQ(m, 0.0);
  EXPECT_EQ(e, 0.0);
}

TEST(Simulator, GaussianMassAgainstGammaFunction) {
  // int e^{-2 r^2} r^{11} dr = Gamma(6) / (2 * 2^6); the finite-volume mass is second order
  const double exact = std::tgamma(6.0) / (2 * std::pow(2.0, 6));
  std::vector<double> err;
  for (double h : {0.02, 0.01}) {
    auto c = base(20);
    c.grid_h = h;
    const Simulator sim(c);
    const auto s = sim.state_from([](double r) { return cplx(std::exp(-r * r), 0); });
    err.push_back(std::abs(sim.mass(s) / exact - 1));
  }
  EXPECT_LT(err[1], 2e-3);
  EXPECT_NEAR(err[0] / err[1], 4.0, 1.0);
}

TEST(Simulator, MassConservedOverThousandSteps) {
  const Simulator sim(base());
  auto s = sim.state_from(gauss_pair);
  const double m0 = sim.mass(s);
  for (int i = 0; i < 1000; ++i) sim.step(s, 1e-3);
  EXPECT_LT(std::abs(sim.mass(s) / m0 - 1), 1e-6);
  EXPECT_NEAR(s.t, 1.0, 1e-12);
}

TEST(Simulator, LinearRegimeEnergyConserved) {
  const Simulator sim(base());
  auto s = sim.state_from([](double r) { return 1e-3 * gauss_pair(r); });
  const double e0 = sim.energy(s);
  ASSERT_GT(e0, 0.0);
  for (int i = 0; i < 1000; ++i) sim.step(s, 1e-3);
  EXPECT_LT(std::abs(sim.energy(s) / e0 - 1), 1e-6);
}

TEST(Simulator, LinearPropagatorIsTimeReversible) {
  auto c = base();
  c.nonlinear = false;
  const Simulator sim(c);
  const auto s0 = sim.state_from(gauss_pair);
  auto s = s0;
  for (int i = 0; i < 200; ++i) sim.step(s, 1e-3);
  double moved = 0;
  for (std::size_t i = 0; i < s.u.size(); ++i) moved = std::max(moved, std::abs(s.u[i] - s0.u[i]));
  EXPECT_GT(moved, 1e-2);
  for (int i = 0; i < 200; ++i) sim.step(s, -1e-3);
  double err = 0;
  for (std::size_t i = 0; i < s.u.size(); ++i) err = std::max(err, std::abs(s.u[i] - s0.u[i]));
  EXPECT_LT(err, 1e-8);
}

TEST(Simulator, GroundStateIsStationary) {
  const Simulator sim(base());
  const auto& Q = sim.ground_state();
  auto s = sim.state_from([](double) { return cplx(0); });
  for (std::size_t i = 0; i < Q.size(); ++i) s.u[i] = Q[i];
  const auto R = sim.evolve(s, 1.0);
  EXPECT_EQ(R.status, SimStatus::completed);
  EXPECT_NEAR(s.t, 1.0, 1e-12);
  double em = 0, ep = 0;
  for (std::size_t i = 0; i < Q.size(); ++i) {
    em = std::max(em, std::abs(std::abs(s.u[i]) - Q[i]));
    if (Q[i] > 1e-3) ep = std::max(ep, std::abs(std::arg(s.u[i])));
  }
  EXPECT_LT(em, 1e-4);
  EXPECT_LT(ep, 1e-4);
  // the discrete ground state is close to the continuum one
  const auto gs = solve_ground_state(derive_params(12, 7), 1e3, 1e-10);
  for (double y : {0.5, 2.0, 10.0}) EXPECT_NEAR(sim.physical_field(s)(y).real(), gs.grid->interpolate(gs.Q.v, Parity::even, y), 1e-3);
}

TEST(Simulator, LargeDataFocusesWithRemeshing) {
  auto c = base(30);
  c.remesh = true;
  const Simulator sim(c);
  auto s = sim.state_from([](double r) { return cplx(3 * std::exp(-r * r), 0); });
  const auto R = sim.evolve(s, 10.0);
  EXPECT_EQ(R.status, SimStatus::focusing);
  EXPECT_GT(s.remeshes, 0);
  EXPECT_LT(s.scale, 1.0);
  EXPECT_LT(R.samples.back().lam, 1e-2);
}

TEST(Sobolev, ProxyMatchesClosedFormsAndScaling) {
  const Simulator sim(base(20));
  const SobolevProxy H(sim, 2);
  const auto s = sim.state_from([](double r) { return cplx(std::exp(-r * r), 0); });
  // ||u||^2 and ||grad u||^2 of e^{-r^2} in d = 12 (without the sphere area)
  EXPECT_NEAR(std::pow(H(s, 0.0), 2) / (std::tgamma(6.0) / 128), 1.0, 0.02);
  EXPECT_NEAR(std::pow(H(s, 1.0), 2) / (4 * std::tgamma(7.0) / 256), 1.0, 0.02);
  // the critical norm is invariant under u -> lam^m u(lam r)
  const double sc = sim.config().params.s_c, m = sim.config().params.m;
  const double n1 = H(s, sc);
  const auto s2 = sim.state_from([&](double r) { return cplx(std::pow(1.5, m) * std::exp(-2.25 * r * r), 0); });
  EXPECT_NEAR(H(s2, sc) / n1, 1.0, 0.02);
  // and exactly so when the change is carried by the scale field
  auto s3 = s;
  s3.scale = 3.0;
  EXPECT_NEAR(H(s3, sc) / n1, 1.0, 1e-12);
  EXPECT_NEAR(sobolev_norm(sim, s, sc, 2), n1, 1e-12 * n1);
}

TEST(Modulation, GroundStateDecomposesTrivially) {
  const auto& S = mod_setup();
  auto q = [&](double r) { return cplx(S.gs.grid->interpolate(S.gs.Q.v, Parity::even, r), 0); };
  const auto r = modulation_decompose(q, S.F, S.X, {1.01, 0.01, {1e-3, 0, 0}, {0}});
  EXPECT_NEAR(r.lam, 1.0, 1e-8);
  EXPECT_NEAR(r.phase, 0.0, 1e-8);
  for (double b : r.b) EXPECT_NEAR(b, 0.0, 1e-8);
  for (double a : r.a) EXPECT_NEAR(a, 0.0, 1e-8);
  EXPECT_LT(r.eps_norm / q_norm(S), 1e-8);
}

TEST(Modulation, PlantAndRecover) {
  const auto& S = mod_setup();
  ProfileConfig pc;
  pc.b = {1e-3, -1e-4, 5e-6};
  pc.a = {2e-4};
  const auto prof = assemble(S.F, pc);
  const double lam = 0.7, phase = 0.3;
  const auto u = modulated_profile(prof, lam, phase);
  const auto r = modulation_decompose(u, S.F, S.X, {0.72, 0.28, {1.05e-3, 0, 0}, {0}});
  std::vector<double> got{r.lam, r.phase}, want{lam, phase};
  for (std::size_t k = 0; k < 3; ++k) {
    got.push_back(r.b[k]);
    want.push_back(pc.b[k]);
  }
  got.push_back(r.a[0]);
  want.push_back(pc.a[0]);
  double scale = 0, worst = 0;
  for (std::size_t k = 0; k < want.size(); ++k) {
    scale = std::max(scale, std::abs(want[k]));
    worst = std::max(worst, std::abs(got[k] - want[k]));
  }
  EXPECT_LT(worst / scale, 1e-6);
  EXPECT_NEAR(r.lam / lam, 1.0, 1e-6);
  EXPECT_NEAR(r.phase, phase, 1e-6);
  EXPECT_NEAR(r.b[0] / pc.b[0], 1.0, 1e-6);
  EXPECT_LT(r.eps_norm / q_norm(S), 1e-6);
}

TEST(Modulation, LostStateIsReported) {
  const auto& S = mod_setup();
  auto junk = [](double r) { return cplx(5 * std::exp(-r), 2 * std::sin(r)); };
  try {
    modulation_decompose(junk, S.F, S.X, {1, 0, {1e-3, 0, 0}, {0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "decomposition-lost");
  }
}

TEST(Modulation, ParametersContinuousAlongEvolution) {
  const auto& S = mod_setup();
  ProfileConfig pc;
  pc.b = {1e-3, 0, 0};
  pc.a = {0};
  const auto prof = assemble(S.F, pc);
  auto c = base(200);
  c.dt = 2e-3;
  const Simulator sim(c);
  auto st = sim.state_from(modulated_profile(prof, 1.0, 0.0));
  ModulationGuess g{1.0, 0.0, pc.b, pc.a};
  double prev = 1.0;
  for (int k = 0; k < 5; ++k) {
    for (int i = 0; i < 10; ++i) sim.step(st, c.dt);
    const auto r = modulation_decompose(sim.physical_field(st), S.F, S.X, g);
    EXPECT_LT(std::abs(r.lam / prev - 1), 1e-3) << k;
    prev = r.lam;
    g = {r.lam, r.phase, r.b, r.a};
  }
}

TEST(Shooting, BisectionFindsOdeStableManifold) {
  const auto P = derive_params(12, 7);
  const auto L = linearization(P.alpha, 2);
  int mode = -1;
  for (int j = 0; j < L.ell; ++j)
    if (L.D(j) > 0) mode = j;
  ASSERT_GE(mode, 0);
  auto f = [&](double v) { return ode_exit_sign(L, mode, 10, v, 1.0, 1e4, 3, 1); };
  EXPECT_EQ(f(0.9), 1);
  EXPECT_EQ(f(-0.9), -1);
  // the explicit orbit, V = 0, is the trapped solution
  const auto B = bisect_exit_sign(f, -0.3, 0.7, 1e-7, 200);
  EXPECT_TRUE(B.converged);
  EXPECT_FALSE(B.bracket_failed);
  EXPECT_NEAR(B.best, 0.0, 1e-6);
  EXPECT_LT(B.hi - B.lo, 1e-6);
}

TEST(Shooting, BisectionBudgetAndBracket) {
  auto step = [](double v) { return v > 0.123 ? 1 : -1; };
  const auto B = bisect_exit_sign(step, 0, 1, 1e-12, 6);
  EXPECT_TRUE(B.budget_exhausted);
  EXPECT_FALSE(B.converged);
  EXPECT_LE(B.lo, 0.123);
  EXPECT_GE(B.hi, 0.123);
  const auto C = bisect_exit_sign([](double) { return 1; }, 0, 1, 1e-6, 50);
  EXPECT_TRUE(C.bracket_failed);
}

TEST(Shooting, RunRecordsUnstableCoordinate) {
  // gs rmax 2e3 and M = 4 as in the default shooting setup
  const auto P = derive_params(12, 7);
  const auto G = solve_ground_state(P, 2e3, 1e-10);
  const auto F = generate_phi_family(G, potentials(G), 3);
  ShootConfig C;
  C.sim = base(200);
  C.sim.dt = 2e-3;
  const auto X = build_xi(F, C.M);
  const auto L = linearization(P.alpha, 2);
  const int mode = L.D(0) > 0 ? 0 : 1;
  const Simulator sim(C.sim);
  // one decomposition after 25 steps, then the horizon ends the run
  C.decompose_every = 25;
  C.s_factor = 1 + 0.03 / C.s0;
  for (double v : {0.0, 0.4}) {
    const auto run = shoot_once(C, F, X, L, sim, mode, v);
    ASSERT_EQ(run.v_unstable.size(), 2u);
    EXPECT_EQ(run.lam.size(), 2u);
    // the initial decomposition reads back the planted coordinate
    EXPECT_NEAR(run.v_unstable.front(), v, 1e-6);
    EXPECT_LT(std::abs(run.v_unstable.back() - v), 0.05);
    EXPECT_EQ(run.exit_sign, 0);
    EXPECT_GT(run.trapping_time, 0.0);
  }
}

TEST(Shooting, RejectsUnsupportedSetups) {
  const auto& S = mod_setup();
  ShootConfig C;
  C.sim = base(200);
  C.ell = 1;
  EXPECT_THROW(shooting_search(C, S.F, S.X), Error);
  C.ell = 4;
  EXPECT_THROW(shooting_search(C, S.F, S.X), Error);
}
