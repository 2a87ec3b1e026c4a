#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "error.hpp"

namespace sclab {

enum class Parity { even, odd };

inline double parity_sign(Parity p) { return p == Parity::even ? 1.0 : -1.0; }

// Finite-difference weights for derivatives 0..M at z from nodes x (Fornberg).
// Returns w[k][j], the weight of node j in the k-th derivative.
inline std::vector<std::vector<double>> fornberg_weights(double z, const std::vector<double>& x, int M) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(M + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, M);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

// Radial grid y_i = a sinh(i h), i = 0..N.  Uniform (spacing ~ a h) near the
// origin, geometric (ratio ~ e^h) far out.  All discrete calculus lives here:
// 4th-order differences in x, product quadrature against y^P, and 6-point
// Lagrange interpolation.
class Grid {
 public:
  Grid(double scale, double h, double rmax) : a_(scale), h_(h) {
    if (!(scale > 0) || !(h > 0) || !(rmax > 0)) throw Error("bad-grid", "scale, h and rmax must be positive");
    const int N = static_cast<int>(std::ceil(std::asinh(rmax / scale) / h));
    if (N < 8) throw Error("bad-grid", "grid needs at least 8 cells");
    y_.resize(N + 1);
    yx_.resize(N + 1);
    yxx_.resize(N + 1);
    for (int i = 0; i <= N; ++i) {
      const double x = i * h;
      y_[i] = a_ * std::sinh(x);
      yx_[i] = a_ * std::cosh(x);
      yxx_[i] = y_[i];
    }
    // one-sided stencils for the last two nodes, 6 nodes each
    for (int r = 0; r < 2; ++r) {
      std::vector<double> xs(6);
      for (int j = 0; j < 6; ++j) xs[j] = static_cast<double>(j - 5);
      end_w_[r] = fornberg_weights(static_cast<double>(r - 1), xs, 2);
    }
  }

  static std::shared_ptr<const Grid> make(double scale, double h, double rmax) {
    return std::make_shared<const Grid>(scale, h, rmax);
  }

  std::size_t size() const { return y_.size(); }
  double scale() const { return a_; }
  double h() const { return h_; }
  double rmax() const { return y_.back(); }
  const std::vector<double>& y() const { return y_; }
  double y(std::size_t i) const { return y_[i]; }
  double x_of(double y) const { return std::asinh(y / a_); }

  // Index of the last node with y_i <= y.
  std::size_t locate(double y) const {
    if (y <= 0) return 0;
    auto it = std::upper_bound(y_.begin(), y_.end(), y);
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - y_.begin()) - 1));
  }

  // First and second x-derivatives.
  void x_derivatives(const std::vector<double>& f, Parity par, std::vector<double>* fx, std::vector<double>* fxx) const {
    check(f);
    const int n = static_cast<int>(size());
    const double s = parity_sign(par);
    auto at = [&](int i) { return i >= 0 ? f[i] : s * f[-i]; };
    if (fx) fx->assign(n, 0.0);
    if (fxx) fxx->assign(n, 0.0);
    const double i12h = 1.0 / (12.0 * h_), i12h2 = 1.0 / (12.0 * h_ * h_);
    for (int i = 0; i < n - 2; ++i) {
      const double fm2 = at(i - 2), fm1 = at(i - 1), f0 = f[i], fp1 = f[i + 1], fp2 = f[i + 2];
      if (fx) (*fx)[i] = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) * i12h;
      if (fxx) (*fxx)[i] = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) * i12h2;
    }
    for (int r = 0; r < 2; ++r) {
      const int i = n - 2 + r;
      double d1 = 0, d2 = 0;
      for (int j = 0; j < 6; ++j) {
        d1 += end_w_[r][1][j] * f[n - 6 + j];
        d2 += end_w_[r][2][j] * f[n - 6 + j];
      }
      if (fx) (*fx)[i] = d1 / h_;
      if (fxx) (*fxx)[i] = d2 / (h_ * h_);
    }
  }

  std::vector<double> derivative(const std::vector<double>& f, Parity par) const {
    std::vector<double> fx;
    x_derivatives(f, par, &fx, nullptr);
    for (std::size_t i = 0; i < fx.size(); ++i) fx[i] /= yx_[i];
    return fx;
  }

  std::vector<double> second_derivative(const std::vector<double>& f, Parity par) const {
    std::vector<double> fx, fxx;
    x_derivatives(f, par, &fx, &fxx);
    for (std::size_t i = 0; i < fx.size(); ++i)
      fxx[i] = (fxx[i] - yxx_[i] * fx[i] / yx_[i]) / (yx_[i] * yx_[i]);
    return fxx;
  }

  // Radial Laplacian f'' + (d-1)/y f' of an even field; at y = 0 it is d f''(0).
  std::vector<double> laplacian(const std::vector<double>& f, int d) const {
    std::vector<double> fx, fxx;
    x_derivatives(f, Parity::even, &fx, &fxx);
    std::vector<double> out(fx.size());
    for (std::size_t i = 0; i < fx.size(); ++i) {
      const double d1 = fx[i] / yx_[i];
      const double d2 = (fxx[i] - yxx_[i] * fx[i] / yx_[i]) / (yx_[i] * yx_[i]);
      out[i] = (i == 0) ? d * d2 : d2 + (d - 1.0) * d1 / y_[i];
    }
    return out;
  }

  // Cumulative integrals F_i = int_0^{y_i} f(y) y^P dy.  The smooth factor f
  // is interpolated by quintics on each cell and integrated exactly against y^P.
  std::vector<double> cumulative(const std::vector<double>& f, Parity par, double P) const {
    check(f);
    const auto& W = cell_weights(P);
    const double s = parity_sign(par);
    const int n = static_cast<int>(size());
    std::vector<double> F(n, 0.0);
    for (int i = 0; i < n - 1; ++i) {
      const int j0 = stencil_start(i);
      double acc = 0;
      for (int j = 0; j < kStencil; ++j) {
        const int k = j0 + j;
        acc += W[kStencil * i + j] * (k >= 0 ? f[k] : s * f[-k]);
      }
      F[i + 1] = F[i] + acc;
    }
    return F;
  }

  double integral(const std::vector<double>& f, Parity par, double P) const {
    check(f);
    const auto& W = cell_weights(P);
    const double s = parity_sign(par);
    const int n = static_cast<int>(size());
    double acc = 0;
    for (int i = 0; i < n - 1; ++i) {
      const int j0 = stencil_start(i);
      for (int j = 0; j < kStencil; ++j) {
        const int k = j0 + j;
        acc += W[kStencil * i + j] * (k >= 0 ? f[k] : s * f[-k]);
      }
    }
    return acc;
  }

  // int_{lo}^{hi} f y^P dy for arbitrary limits inside the grid.
  double integral_between(const std::vector<double>& f, Parity par, double P, double lo, double hi) const {
    check(f);
    if (hi < lo) return -integral_between(f, par, P, hi, lo);
    if (lo < 0 || hi > rmax() * (1 + 1e-14)) throw Error("grid-too-short", "integration limits outside grid");
    const double s = parity_sign(par);
    double acc = 0;
    const std::size_t i0 = std::min(locate(lo), size() - 2);
    const std::size_t i1 = std::min(locate(hi), size() - 2);
    for (std::size_t i = i0; i <= i1; ++i) {
      const double a = std::max(lo, y_[i]);
      const double b = std::min(hi, y_[i + 1]);
      if (b <= a) continue;
      const int j0 = stencil_start(static_cast<int>(i));
      std::array<double, kStencil> nodes{}, vals{};
      for (int j = 0; j < kStencil; ++j) {
        const int k = j0 + j;
        nodes[j] = k >= 0 ? y_[k] : -y_[-k];
        vals[j] = k >= 0 ? f[k] : s * f[-k];
      }
      acc += gauss_cell(a, b, P, [&](double t) {
        double v = 0;
        for (int j = 0; j < kStencil; ++j) v += vals[j] * lagrange(nodes, j, t);
        return v;
      });
    }
    return acc;
  }

  // Weights w with integral_between(f, par, P, lo, hi) = sum_i w_i f_i.
  std::vector<double> weights_between(Parity par, double P, double lo, double hi) const {
    if (hi < lo || lo < 0 || hi > rmax() * (1 + 1e-14)) throw Error("grid-too-short", "integration limits outside grid");
    const double s = parity_sign(par);
    std::vector<double> w(size(), 0.0);
    const std::size_t i0 = std::min(locate(lo), size() - 2);
    const std::size_t i1 = std::min(locate(hi), size() - 2);
    for (std::size_t i = i0; i <= i1; ++i) {
      const double a = std::max(lo, y_[i]);
      const double b = std::min(hi, y_[i + 1]);
      if (b <= a) continue;
      const int j0 = stencil_start(static_cast<int>(i));
      std::array<double, kStencil> nodes{};
      for (int j = 0; j < kStencil; ++j) {
        const int k = j0 + j;
        nodes[j] = k >= 0 ? y_[k] : -y_[-k];
      }
      for (int j = 0; j < kStencil; ++j) {
        const int k = j0 + j;
        const double c = gauss_cell(a, b, P, [&](double t) { return lagrange(nodes, j, t); });
        if (k >= 0)
          w[k] += c;
        else
          w[-k] += s * c;
      }
    }
    return w;
  }

  // 6-point Lagrange interpolation in x; parity supplies ghost values.
  double interpolate(const std::vector<double>& f, Parity par, double yq) const {
    check(f);
    if (yq < 0) return parity_sign(par) * interpolate(f, par, -yq);
    if (yq > rmax() * (1 + 1e-12)) throw Error("grid-too-short", "interpolation point beyond rmax");
    const int n = static_cast<int>(size());
    const double xq = x_of(yq) / h_;
    int j = static_cast<int>(std::floor(xq));
    int j0 = std::clamp(j - 2, -2, n - 6);
    const double s = parity_sign(par);
    double acc = 0;
    for (int a = 0; a < 6; ++a) {
      double L = 1;
      for (int b = 0; b < 6; ++b)
        if (b != a) L *= (xq - (j0 + b)) / static_cast<double>(a - b);
      const int k = j0 + a;
      acc += L * (k >= 0 ? f[k] : s * f[-k]);
    }
    return acc;
  }

  void check(const std::vector<double>& f) const {
    if (f.size() != size()) throw Error("grid-mismatch", "field length does not match grid");
  }

 private:
  // Product quadrature interpolates the smooth factor on each cell through
  // kStencil nodes centred on the cell (quintic, 6th order).
  static constexpr int kStencil = 6;

  int stencil_start(int i) const {
    const int n = static_cast<int>(size());
    return std::min(i - kStencil / 2 + 1, n - kStencil);
  }

  static double lagrange(const std::array<double, kStencil>& nodes, int j, double t) {
    double L = 1;
    for (int k = 0; k < kStencil; ++k)
      if (k != j) L *= (t - nodes[k]) / (nodes[j] - nodes[k]);
    return L;
  }

  template <class F>
  static double gauss_cell(double a, double b, double P, F&& g) {
    using rule = boost::math::quadrature::gauss<double, 20>;
    const auto& xs = rule::abscissa();
    const auto& ws = rule::weights();
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double acc = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      for (int sgn : {-1, 1}) {
        if (k == 0 && sgn == 1 && xs[0] == 0.0) continue;
        const double t = c + sgn * r * xs[k];
        acc += ws[k] * g(t) * (P == 0 ? 1.0 : std::pow(t, P));
      }
    }
    return acc * r;
  }

  const std::vector<double>& cell_weights(double P) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = weights_.find(P);
    if (it != weights_.end()) return it->second;
    const int n = static_cast<int>(size());
    std::vector<double> W(kStencil * (n - 1));
    for (int i = 0; i < n - 1; ++i) {
      const int j0 = stencil_start(i);
      std::array<double, kStencil> nodes{};
      for (int j = 0; j < kStencil; ++j) {
        const int k = j0 + j;
        nodes[j] = k >= 0 ? y_[k] : -y_[-k];
      }
      for (int j = 0; j < kStencil; ++j)
        W[kStencil * i + j] = gauss_cell(y_[i], y_[i + 1], P, [&](double t) { return lagrange(nodes, j, t); });
    }
    return weights_.emplace(P, std::move(W)).first->second;
  }

  double a_, h_;
  std::vector<double> y_, yx_, yxx_;
  std::array<std::vector<std::vector<double>>, 2> end_w_;
  mutable std::mutex mu_;
  mutable std::map<double, std::vector<double>> weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

}  // namespace sclab
