#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include <sclab/linop.hpp>

using namespace sclab;

namespace {

struct Setup {
  GroundState gs;
  Potentials pot;
  ProfileFamily fam;
};

const Setup& setup() {
  static const Setup S = [] {
    Setup s;
    s.gs = solve_ground_state(derive_params(12, 7), 1e3, 1e-10, 5e-4);
    s.pot = potentials(s.gs);
    s.fam = generate_phi_family(s.gs, s.pot, 3);
    psi_directions(s.fam);
    return s;
  }();
  return S;
}

const XiDirections& xi(double M) {
  static std::map<double, XiDirections> cache;
  auto it = cache.find(M);
  if (it == cache.end()) it = cache.emplace(M, build_xi(setup().fam, M)).first;
  return it->second;
}

using Fn = std::function<double(double)>;

// Ten smooth, rapidly decaying test functions with analytic values.
std::vector<Fn> corpus() {
  return {
      [](double y) { return std::exp(-y * y); },
      [](double y) { return std::exp(-y * y / 4); },
      [](double y) { return y * y * std::exp(-y * y); },
      [](double y) { return std::exp(-(y - 3) * (y - 3)); },
      [](double y) { return std::pow(1 + y * y, -6.0); },
      [](double y) { return std::cos(y) * std::pow(1 + y * y, -8.0); },
      [](double y) { return smooth_step(y / 2); },
      [](double y) { return std::pow(y, 4) * std::exp(-y); },
      [](double y) { return 1 / std::cosh(y); },
      [](double y) { return std::exp(-y * y) * (1 - y * y / 3); },
  };
}

double sup_rel(const RadialField& a, const RadialField& b, double ymax) {
  double e = 0, s = 0;
  for (std::size_t i = 0; i < a.size() && a.grid->y(i) <= ymax; ++i) {
    e = std::max(e, std::abs(a[i] - b[i]));
    s = std::max(s, std::abs(b[i]));
  }
  return e / s;
}

double sup_abs(const RadialField& a, double ymax) {
  double s = 0;
  for (std::size_t i = 0; i < a.size() && a.grid->y(i) <= ymax; ++i) s = std::max(s, std::abs(a[i]));
  return s;
}

}  // namespace

TEST(Ltilde, KernelElements) {
  const auto& S = setup();
  const double ymax = S.gs.grid->rmax() / 2;
  const auto r = apply_Ltilde({S.gs.LQ, S.gs.Q}, S.pot);
  // second differences at h = 5e-4 sit on a round-off floor near 1e-8
  EXPECT_LT(sup_abs(r.re, ymax) / sup_abs(S.pot.W_minus, ymax), 1e-7);
  EXPECT_LT(sup_abs(r.im, ymax) / sup_abs(S.pot.W_plus, ymax), 1e-7);
  const auto z = apply_Ltilde({RadialField(S.gs.grid, 12), S.gs.Q}, S.pot);
  EXPECT_LT(sup_abs(z.re, ymax), 1e-7);
  EXPECT_LT(sup_abs(z.im, ymax), 1e-300);
}

TEST(Ltilde, MatchesAnalyticLaplacianOnGaussian) {
  const auto& S = setup();
  const auto g = S.gs.grid;
  const auto f = RadialField::sample(g, 12, [](double y) { return std::exp(-y * y); });
  const auto r = apply_Ltilde({f, RadialField(g, 12)}, S.pot);
  // -L_+ f = Delta f + p Q^{p-1} f with Delta e^{-y^2} = (4y^2 - 2d) e^{-y^2}
  double e = 0;
  for (std::size_t i = 0; g->y(i) < 10; ++i) {
    const double y = g->y(i);
    const double ref = (4 * y * y - 24) * std::exp(-y * y) + S.pot.W_plus[i] * std::exp(-y * y);
    e = std::max(e, std::abs(r.im[i] - ref));
  }
  EXPECT_LT(e, 1e-8);
  EXPECT_EQ(r.re.max_abs(), 0.0);
}

TEST(Ltilde, AdjointIdentity) {
  const auto& S = setup();
  const auto g = S.gs.grid;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1, 1), C(0.5, 6);
  auto random_field = [&] {
    const double a = U(rng), b = U(rng), c1 = C(rng), c2 = C(rng);
    return ComplexPair{RadialField::sample(g, 12, [&](double y) { return a * std::exp(-(y - c1) * (y - c1)); }),
                       RadialField::sample(g, 12, [&](double y) { return b * std::exp(-(y - c2) * (y - c2)); })};
  };
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = random_field(), v = random_field();
    const double lhs = inner(apply_Ltilde_adj(u, S.pot), v);
    const double rhs = inner(u, apply_Ltilde(v, S.pot));
    EXPECT_NEAR(lhs, rhs, 1e-8 * (std::abs(lhs) + std::abs(rhs)));
  }
}

TEST(Inversion, ZeroMapsToZero) {
  const auto& S = setup();
  const RadialField z(S.gs.grid, 12);
  EXPECT_EQ(invert_Lplus(z, S.gs).max_abs(), 0.0);
  EXPECT_EQ(invert_Lminus(z, S.gs).max_abs(), 0.0);
}

TEST(Inversion, CorpusRoundTrips) {
  const auto& S = setup();
  const auto g = S.gs.grid;
  const double ymax = g->rmax() / 2;
  int n = 0;
  for (const auto& fn : corpus()) {
    const auto f = RadialField::sample(g, 12, fn);
    const auto up = invert_Lplus(f, S.gs);
    EXPECT_LT(sup_rel(apply_Lplus(up, S.pot), f, ymax), 1e-6) << "L_+ corpus " << n;
    const auto um = invert_Lminus(f, S.gs);
    EXPECT_LT(sup_rel(apply_Lminus(um, S.pot), f, ymax), 1e-6) << "L_- corpus " << n;
    ++n;
  }
}

TEST(Inversion, RecoversPreimageUpToKernel) {
  const auto& S = setup();
  const auto g = S.gs.grid;
  const auto G = RadialField::sample(g, 12, [](double y) { return std::exp(-y * y); });
  // f = L_+ G evaluated analytically
  auto f = RadialField::sample(g, 12, [](double y) { return -(4 * y * y - 24) * std::exp(-y * y); });
  for (std::size_t i = 0; i < f.size(); ++i) f[i] -= S.pot.W_plus[i] * G[i];
  const auto u = invert_Lplus(f, S.gs);
  const double c = (u[0] - G[0]) / S.gs.LQ[0];
  double e = 0;
  for (std::size_t i = 0; g->y(i) < 100; ++i) e = std::max(e, std::abs(u[i] - G[i] - c * S.gs.LQ[i]));
  EXPECT_LT(e, 1e-8);
}

TEST(Inversion, TailsOfFirstGenerators) {
  const auto& S = setup();
  const auto& P = S.gs.params;
  const double lo = 1e2, hi = 1e3;
  InversionReport rep;
  const auto a = invert_Lminus(S.gs.LQ, S.gs, &rep);
  EXPECT_NEAR(tail_fit(a, {}, lo, hi).leading_exponent / (2 - P.tail_gamma), 1.0, 0.02);
  const auto b = invert_Lplus(S.gs.Q, S.gs);
  EXPECT_NEAR(tail_fit(b, {}, lo, hi).leading_exponent / (2 - P.m), 1.0, 0.02);
  const auto c = invert_Lminus(S.gs.Q, S.gs, &rep);
  EXPECT_FALSE(rep.from_infinity);
  EXPECT_NEAR(tail_fit(c, {}, lo, hi).leading_exponent / (2 - P.m), 1.0, 0.02);
}

TEST(Family, SeedsAndSizes) {
  const auto& F = setup().fam;
  EXPECT_EQ(F.L_plus, 3);
  EXPECT_EQ(F.L_minus, 1);
  EXPECT_EQ(F.phi_plus[0].re.v, F.gs->LQ.v);
  EXPECT_EQ(F.phi_plus[0].im.max_abs(), 0.0);
  EXPECT_EQ(F.phi_minus[0].im.v, F.gs->Q.v);
  EXPECT_EQ(F.phi_minus[0].re.max_abs(), 0.0);
  EXPECT_THROW(generate_phi_family(*F.gs, F.pot, 1), Error);
}

TEST(Family, ForwardResiduals) {
  const auto& F = setup().fam;
  for (int k = 1; k <= F.L_plus; ++k) EXPECT_LT(F.phi_plus_residual[k], 1e-6) << k;
  for (int k = 1; k <= F.L_minus; ++k) EXPECT_LT(F.phi_minus_residual[k], 1e-6) << k;
}

TEST(Family, TailExponents) {
  const auto& F = setup().fam;
  const auto& P = F.params;
  for (int k = 0; k <= std::min(3, F.L_plus); ++k) {
    EXPECT_NEAR(F.phi_plus_expected[k], 2 * k - P.tail_gamma, 1e-14);
    EXPECT_NEAR(F.phi_plus_fit[k].leading_exponent / F.phi_plus_expected[k], 1.0, 0.02) << k;
  }
  for (int k = 0; k <= std::min(3, F.L_minus); ++k) {
    EXPECT_NEAR(F.phi_minus_expected[k], 2 * k - P.m, 1e-14);
    EXPECT_NEAR(F.phi_minus_fit[k].leading_exponent / F.phi_minus_expected[k], 1.0, 0.02) << k;
  }
}

TEST(Family, PsiTailsDropOneDegree) {
  // |Psi_i| / |Phi_i| = O(y^{-2}): the weighted ratio y^2 |Psi| / |Phi| must not grow
  // from the decade [30, 100] to [300, 1000]; without the cancellation it grows ~100x.
  const auto& F = setup().fam;
  const auto g = F.grid();
  auto weighted = [&](const RadialField& psi, const RadialField& phi, double lo, double hi) {
    double w = 0;
    for (std::size_t i = g->locate(lo); g->y(i) <= hi; ++i)
      w = std::max(w, g->y(i) * g->y(i) * std::abs(psi[i]) / std::abs(phi[i]));
    return w;
  };
  for (int i = 1; i <= F.L_plus; ++i) {
    const auto psi = tail_component(F.psi_plus[i], i, true), phi = tail_component(F.phi_plus[i], i, true);
    EXPECT_LT(weighted(psi, phi, 300, 1000), 2 * weighted(psi, phi, 30, 100)) << i;
  }
  for (int i = 1; i <= F.L_minus; ++i) {
    const auto psi = tail_component(F.psi_minus[i], i, false), phi = tail_component(F.phi_minus[i], i, false);
    EXPECT_LT(weighted(psi, phi, 300, 1000), 2 * weighted(psi, phi, 30, 100)) << i;
  }
}

TEST(Family, PsiOfExactMonomialVanishes) {
  const auto& S = setup();
  const auto& P = S.gs.params;
  const auto g = S.gs.grid;
  for (int i = 1; i <= 3; ++i) {
    const double ep = 2 * i - P.tail_gamma, em = 2 * i - P.m;
    const RadialField zero(g, 12);
    const ComplexPair mp{RadialField::sample(g, 12, [&](double y) { return std::pow(1 + y * y, ep / 2); }), zero};
    const ComplexPair mm{zero, RadialField::sample(g, 12, [&](double y) { return std::pow(1 + y * y, em / 2); })};
    // Lambda (1+y^2)^{e/2} = (m + e)(1+y^2)^{e/2} - e (1+y^2)^{e/2-1}; the shift cancels the first term
    const auto rp = psi_of(mp, 2 * i - P.alpha, P.m);
    const auto rm = psi_of(mm, 2.0 * i, P.m);
    double ep_err = 0, em_err = 0;
    for (std::size_t k = 0; g->y(k) < 500; ++k) {
      const double y = g->y(k);
      ep_err = std::max(ep_err, std::abs(rp.re[k] + ep * std::pow(1 + y * y, ep / 2 - 1)) / std::pow(1 + y * y, ep / 2));
      em_err = std::max(em_err, std::abs(rm.im[k] + em * std::pow(1 + y * y, em / 2 - 1)) / std::pow(1 + y * y, em / 2));
    }
    EXPECT_LT(ep_err, 1e-9) << i;
    EXPECT_LT(em_err, 1e-9) << i;
    EXPECT_EQ(rp.im.max_abs(), 0.0);
  }
}

TEST(Family, DegreeBookkeeping) {
  const auto& S = setup();
  const auto g = S.gs.grid;
  for (double q : {1.0, 2.5}) {
    const auto f = RadialField::sample(g, 12, [&](double y) { return (1 - smooth_step(y / 5)) * std::pow(y, q); });
    const auto Lf = apply_Lplus(f, S.pot);
    EXPECT_NEAR(tail_fit(Lf, {}, 50, 500).leading_exponent, q - 2, 0.02 * std::abs(q - 2) + 0.02) << q;
  }
  const auto seed = RadialField::sample(g, 12, [](double y) { return std::pow(1 + y * y, -3.0); });
  const auto up = invert_Lplus(seed, S.gs);
  const double base = tail_fit(seed, {}, 1e2, 1e3).leading_exponent;
  EXPECT_NEAR(tail_fit(up, {}, 1e2, 1e3).leading_exponent, -S.gs.params.tail_gamma, 0.05);
  EXPECT_GT(tail_fit(up, {}, 1e2, 1e3).leading_exponent, base + 2 - 0.05);
}

TEST(Xi, Biorthogonality) {
  for (double M : {10.0, 20.0, 40.0}) {
    const auto& X = xi(M);
    EXPECT_LT(biorthogonality_defect(X), 1e-6) << M;
    EXPECT_NEAR(X.plus_on_xi_plus[0], -X.pairing, 1e-6 * X.pairing);
    EXPECT_NEAR(X.minus_on_xi_minus[0], X.pairing, 1e-6 * X.pairing);
    EXPECT_LT(std::abs(X.minus_on_xi_plus[0]), 1e-6 * X.pairing);
    EXPECT_LT(std::abs(X.plus_on_xi_minus[0]), 1e-6 * X.pairing);
  }
}

TEST(Xi, CompactSupport) {
  const auto& X = xi(10.0);
  const auto g = setup().gs.grid;
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (g->y(i) < 20.0) continue;
    ASSERT_EQ(X.xi_plus.re[i], 0.0);
    ASSERT_EQ(X.xi_plus.im[i], 0.0);
    ASSERT_EQ(X.xi_minus.re[i], 0.0);
    ASSERT_EQ(X.xi_minus.im[i], 0.0);
  }
}

TEST(Xi, PairingScalesWithM) {
  const auto& P = setup().gs.params;
  const double slope = std::log(xi(40.0).pairing / xi(10.0).pairing) / std::log(4.0);
  EXPECT_NEAR(slope / (P.d - P.tail_gamma - P.m), 1.0, 0.05);
}

TEST(Xi, CoefficientGrowth) {
  const auto& A = xi(10.0);
  const auto& B = xi(40.0);
  for (std::size_t k = 1; k < A.cp_plus.size(); ++k) {
    if (A.cp_plus[k] == 0.0) continue;
    const double slope = std::log(std::abs(B.cp_plus[k] / A.cp_plus[k])) / std::log(4.0);
    EXPECT_LT(slope, 2.0 * k * 1.1 + 1e-9) << k;
  }
}

TEST(Xi, Errors) {
  const auto& F = setup().fam;
  try {
    build_xi(F, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "M-too-small");
  }
  EXPECT_THROW(build_xi(F, 600.0), Error);
}
