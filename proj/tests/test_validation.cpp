#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <sclab/validation.hpp>

using namespace sclab;

namespace {

struct Setup {
  std::shared_ptr<const GroundState> gs;
  ProfileFamily F;
  XiDirections X;
};

const Setup& setup(double h) {
  static std::map<double, Setup> cache;
  auto it = cache.find(h);
  if (it == cache.end()) {
    Setup s;
    s.gs = std::make_shared<const GroundState>(solve_ground_state(derive_params(12, 7), 5e4, 1e-10, h));
    s.F = generate_phi_family(*s.gs, potentials(*s.gs), 3);
    s.X = build_xi(s.F, 10);
    it = cache.emplace(h, std::move(s)).first;
  }
  return it->second;
}

const GridPtr& hardy_grid() {
  static const GridPtr g = Grid::make(1.0, 2e-3, 50);
  return g;
}

}  // namespace

TEST(Hardy, SupportAwayFromUnitBallIsTrivial) {
  const auto u = RadialField::sample(hardy_grid(), 12, [](double y) { return y > 2 ? std::exp(-(y - 5) * (y - 5)) * smooth_step(y - 2) : 0.0; });
  const auto r = hardy_check(HardyVariant::origin, u);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.weighted, 0.0);
  EXPECT_EQ(r.boundary, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Hardy, OriginConstantAndSharpness) {
  const auto far = RadialField::sample(hardy_grid(), 12, [](double y) { return std::exp(-(y - 5) * (y - 5)); });
  const auto r = hardy_check(HardyVariant::origin, far);
  EXPECT_EQ(r.constant, 25.0);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.ratio, 25.0 * 0.99);

  const auto suite = hardy_suite(12);
  const auto& sharp = suite.front();
  EXPECT_EQ(sharp.id, "origin-sharp");
  EXPECT_NEAR(sharp.ratio / 25.0, 1.0, 0.01);
  EXPECT_GE(sharp.ratio, 25.0 * (1 - 1e-6));
  for (const auto& x : suite) EXPECT_TRUE(x.pass) << x.id << " " << x.descriptor;
}

TEST(Hardy, CriticalSweepMatchesQuadratureOracle) {
  // In t = log y both sides are one-dimensional: int (du/dt)^2 dt and int u^2 / (1+t)^2 dt.
  const auto suite = hardy_suite(12);
  const double T = std::log(1e7);
  const double tmax = std::log(Grid::make(1.0, 1e-3, 1e8)->rmax());
  std::vector<double> ratios;
  for (const auto& r : suite) {
    if (r.id != "critical") continue;
    const double eps = std::vector<double>{0.3, 0.1, 0.03}[ratios.size()];
    const double a = 0.5 + eps;
    auto u = [&](double t) { return std::pow(1 + t, a) * smooth_step(t / T); };
    auto du = [&](double t) {
      const Jet c = cutoff_jet(t, T, 1);
      return a * std::pow(1 + t, a - 1) * c[0] + std::pow(1 + t, a) * c[1];
    };
    auto gk = [](auto f, double lo, double hi) {
      return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
    };
    double lhs = 0, w = 0;
    for (auto [lo, hi] : {std::pair{0.0, T}, std::pair{T, std::min(2 * T, tmax)}}) {
      lhs += gk([&](double t) { return du(t) * du(t); }, lo, hi);
      w += gk([&](double t) { return u(t) * u(t) / ((1 + t) * (1 + t)); }, lo, hi);
    }
    EXPECT_NEAR(r.lhs, lhs, 1e-7 * lhs) << eps;
    EXPECT_NEAR(r.weighted, w, 1e-7 * w) << eps;
    EXPECT_NEAR(r.boundary, 0.5, 1e-12);
    EXPECT_TRUE(r.pass);
    ratios.push_back(r.ratio);
  }
  ASSERT_EQ(ratios.size(), 3u);
  EXPECT_GT(ratios[0], ratios[1]);
  EXPECT_GT(ratios[1], ratios[2]);
  EXPECT_GE(ratios[2], 0.25);
}

TEST(Hardy, ExteriorAgainstClosedFormConstant) {
  const auto far = RadialField::sample(hardy_grid(), 12, [](double y) { return std::exp(-(y - 5) * (y - 5)); });
  for (double q : {1.0, 3.0, 4.5, 7.0}) {
    HardyOptions o;
    o.q = q;
    const auto r = hardy_check(HardyVariant::exterior, far, o);
    EXPECT_NEAR(r.constant, 0.25 * (10 - 2 * q) * (10 - 2 * q), 1e-14);
    EXPECT_TRUE(r.pass) << q;
  }
  HardyOptions bad;
  bad.q = 5.0;
  EXPECT_THROW(hardy_check(HardyVariant::exterior, far, bad), Error);
  HardyOptions w;
  w.k = 1;
  EXPECT_THROW(hardy_check(HardyVariant::weighted_general, far, w), Error);
}

TEST(Hardy, RatiosAreHomogeneousOfDegreeZero) {
  const auto u = RadialField::sample(hardy_grid(), 12, [](double y) { return std::exp(-y * y) * (1 + y); });
  for (auto v : {HardyVariant::origin, HardyVariant::critical, HardyVariant::weighted_general}) {
    HardyOptions o;
    o.constant = 1e-3;
    const auto a = hardy_check(v, u, o), b = hardy_check(v, 2.0 * u, o);
    EXPECT_NEAR(b.ratio, a.ratio, 1e-12 * std::abs(a.ratio)) << to_string(v);
    EXPECT_EQ(a.pass, b.pass);
  }
}

TEST(Coercivity, SuitePassesAndConstraintMatters) {
  const auto& S = setup(0.01);
  const auto suite = coercivity_suite(S.F, S.X);
  EXPECT_TRUE(suite.pass);
  for (const auto& r : suite.constrained) {
    EXPECT_TRUE(r.positive) << r.k;
    EXPECT_LT(r.constraint_residual, 1e-8) << r.k;
  }
  EXPECT_FALSE(suite.constrained.empty());
  EXPECT_EQ(suite.constrained.front().k, 0);
  EXPECT_EQ(suite.constrained.front().constraints, 0);
  EXPECT_LE(suite.unconstrained.min_quotient, 1e-3);
  EXPECT_GT(suite.unconstrained.overlap, 0.9);
}

TEST(Coercivity, ZeroOrderConstantStableUnderRefinement) {
  CoercivityOptions o;
  const double a = coercivity_check(setup(0.01).F, nullptr, 0, o).min_quotient;
  const double b = coercivity_check(setup(0.005).F, nullptr, 0, o).min_quotient;
  ASSERT_GT(a, 0.0);
  EXPECT_NEAR(b / a, 1.0, 0.2);
}

TEST(Coercivity, RejectsOutOfRangeOrder) {
  const auto& S = setup(0.01);
  EXPECT_THROW(coercivity_check(S.F, &S.X, -1), Error);
  EXPECT_THROW(coercivity_check(S.F, &S.X, S.F.params.k_minus + 2), Error);
}
