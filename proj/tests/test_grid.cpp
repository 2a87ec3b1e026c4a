#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <sclab/radial_field.hpp>

using namespace sclab;

namespace {

double oracle(double (*f)(double), double P, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double y) { return f(y) * std::pow(y, P); }, lo, hi, 15, 1e-14);
}

double gauss(double y) { return std::exp(-y * y); }

}  // namespace

TEST(Grid, RejectsBadParameters) {
  EXPECT_THROW(Grid(0.0, 0.01, 10), Error);
  EXPECT_THROW(Grid(1.0, -0.01, 10), Error);
  EXPECT_THROW(Grid(1.0, 1.0, 1.0), Error);
}

TEST(Grid, NodesAreSinhMapped) {
  auto g = Grid::make(0.5, 0.01, 100);
  EXPECT_EQ(g->y(0), 0.0);
  EXPECT_GE(g->rmax(), 100.0);
  for (std::size_t i : {1ul, 10ul, 300ul}) EXPECT_NEAR(g->y(i), 0.5 * std::sinh(i * 0.01), 1e-14 * g->y(i));
  for (double y : {0.3, 7.0, 55.0}) {
    const auto i = g->locate(y);
    EXPECT_LE(g->y(i), y);
    EXPECT_GT(g->y(i + 1), y);
  }
}

TEST(Grid, IntegralMatchesGaussianMoment) {
  // int_0^inf e^{-y^2} y^{d-1} dy = Gamma(d/2) / 2; the quintic product rule is sixth order
  for (int d : {3, 8, 12}) {
    const double exact = 0.5 * std::tgamma(0.5 * d);
    std::vector<double> err;
    for (double h : {0.01, 0.005}) {
      auto g = Grid::make(1.0, h, 12);
      std::vector<double> f(g->size());
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = gauss(g->y(i));
      err.push_back(std::abs(g->integral(f, Parity::even, d - 1.0) - exact) / exact);
    }
    EXPECT_LT(err[1], 1e-9) << d;
    if (err[0] > 1e-12) {
      EXPECT_GT(err[0] / err[1], 40.0) << d;
    }
  }
}

TEST(Grid, CumulativeAndPartialIntegralsAgree) {
  auto g = Grid::make(0.7, 0.005, 20);
  std::vector<double> f(g->size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = gauss(g->y(i));
  const auto F = g->cumulative(f, Parity::even, 11.0);
  for (std::size_t i : {40ul, 300ul, g->size() - 1}) {
    const double ref = oracle(gauss, 11.0, 0.0, g->y(i));
    EXPECT_NEAR(F[i], ref, 1e-9 * ref + 1e-18);
  }
  for (auto [lo, hi] : {std::pair{0.13, 0.9}, std::pair{1.5, 3.7}, std::pair{0.0, 19.0}}) {
    const double ref = oracle(gauss, 11.0, lo, hi);
    const double a = g->integral_between(f, Parity::even, 11.0, lo, hi);
    EXPECT_NEAR(a, ref, 1e-9 * ref);
    const auto w = g->weights_between(Parity::even, 11.0, lo, hi);
    double b = 0;
    for (std::size_t i = 0; i < w.size(); ++i) b += w[i] * f[i];
    EXPECT_NEAR(a, b, 1e-13 * std::abs(a));
  }
  EXPECT_NEAR(g->integral_between(f, Parity::even, 11.0, 3.0, 1.0),
              -g->integral_between(f, Parity::even, 11.0, 1.0, 3.0), 1e-15);
  EXPECT_THROW(g->integral_between(f, Parity::even, 11.0, 0.0, 1e3), Error);
}

TEST(Grid, DerivativesAreFourthOrder) {
  double prev = 0;
  for (double h : {0.02, 0.01}) {
    auto g = Grid::make(1.0, h, 8);
    std::vector<double> f(g->size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = gauss(g->y(i));
    const auto d1 = g->derivative(f, Parity::even);
    const auto lap = g->laplacian(f, 5);
    double err = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double y = g->y(i);
      err = std::max(err, std::abs(d1[i] + 2 * y * gauss(y)));
      // Laplacian of e^{-y^2} in d = 5
      err = std::max(err, std::abs(lap[i] - (4 * y * y - 10) * gauss(y)) / 10);
    }
    if (prev > 0) {
      EXPECT_GT(prev / err, 10.0);  // 16 for fourth order
    }
    prev = err;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(Grid, OddParityGhosts) {
  auto g = Grid::make(1.0, 0.01, 5);
  std::vector<double> f(g->size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = g->y(i) * gauss(g->y(i));
  const auto d1 = g->derivative(f, Parity::odd);
  EXPECT_NEAR(d1[0], 1.0, 1e-8);
  EXPECT_NEAR(g->interpolate(f, Parity::odd, -0.3), -0.3 * gauss(0.3), 1e-10);
  EXPECT_NEAR(g->interpolate(f, Parity::odd, 1.234), 1.234 * gauss(1.234), 1e-10);
}

TEST(RadialField, ArithmeticAndInner) {
  auto g = Grid::make(1.0, 0.01, 10);
  auto a = RadialField::sample(g, 4, [](double y) { return gauss(y); });
  auto b = RadialField::sample(g, 4, [](double y) { return y * y * gauss(y); });
  const auto c = 2.0 * a - b;
  EXPECT_NEAR(c[10], 2 * a[10] - b[10], 1e-15);
  // int e^{-2y^2} y^3 dy = 1/8
  EXPECT_NEAR(inner(a, a), 0.125, 1e-9);
  EXPECT_NEAR(a.at(0.5), gauss(0.5), 1e-10);
  auto other = Grid::make(1.0, 0.02, 10);
  EXPECT_THROW(require_same_grid(a, RadialField(other, 4)), Error);
  ComplexPair u{a, b};
  const auto Ju = J(u);
  EXPECT_NEAR(inner(u, Ju), 0.0, 1e-15);
  EXPECT_NEAR(inner(Ju, Ju), inner(u, u), 1e-15);
}
