#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ground_state.hpp"

namespace sclab {

// Truncated Taylor expansion f(y0 + s) = sum_k c[k] s^k.  Used wherever an
// operator is applied many times in a row: repeated finite differences lose
// roughly log10(1/h^2) digits per application, jets lose none.
class Jet {
 public:
  Jet() = default;
  explicit Jet(int order) : c_(order + 1, 0.0) {}

  static Jet constant(double v, int order) {
    Jet j(order);
    j.c_[0] = v;
    return j;
  }
  static Jet variable(double y0, int order) {
    Jet j(order);
    j.c_[0] = y0;
    if (order >= 1) j.c_[1] = 1.0;
    return j;
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double operator[](int k) const { return c_[k]; }
  double& operator[](int k) { return c_[k]; }
  double value() const { return c_[0]; }

  // k-th derivative at y0.
  double derivative(int k) const {
    double f = 1;
    for (int j = 2; j <= k; ++j) f *= j;
    return c_[k] * f;
  }

  Jet d() const {
    Jet r(std::max(order() - 1, 0));
    for (int k = 0; k < order(); ++k) r.c_[k] = (k + 1) * c_[k + 1];
    return r;
  }

  Jet truncated(int order) const {
    Jet r(order);
    for (int k = 0; k <= std::min(order, this->order()); ++k) r.c_[k] = c_[k];
    return r;
  }

  bool is_zero() const {
    for (double x : c_)
      if (x != 0.0) return false;
    return true;
  }

 private:
  std::vector<double> c_;
};

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r(std::min(a.order(), b.order()));
  for (int k = 0; k <= r.order(); ++k) r[k] = a[k] + b[k];
  return r;
}
inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r(std::min(a.order(), b.order()));
  for (int k = 0; k <= r.order(); ++k) r[k] = a[k] - b[k];
  return r;
}
inline Jet operator*(double s, Jet a) {
  for (int k = 0; k <= a.order(); ++k) a[k] *= s;
  return a;
}
inline Jet operator-(Jet a) { return -1.0 * std::move(a); }
inline Jet operator+(double s, Jet a) {
  a[0] += s;
  return a;
}
inline Jet operator+(Jet a, double s) { return s + std::move(a); }

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r(std::min(a.order(), b.order()));
  for (int k = 0; k <= r.order(); ++k) {
    double acc = 0;
    for (int j = 0; j <= k; ++j) acc += a[j] * b[k - j];
    r[k] = acc;
  }
  return r;
}

inline Jet operator/(const Jet& a, const Jet& b) {
  if (b[0] == 0.0) throw Error("jet-division", "division by a jet vanishing at its base point");
  Jet q(std::min(a.order(), b.order()));
  for (int k = 0; k <= q.order(); ++k) {
    double acc = a[k];
    for (int j = 1; j <= k; ++j) acc -= b[j] * q[k - j];
    q[k] = acc / b[0];
  }
  return q;
}

inline Jet exp(const Jet& a) {
  Jet e(a.order());
  e[0] = std::exp(a[0]);
  for (int k = 1; k <= a.order(); ++k) {
    double acc = 0;
    for (int j = 1; j <= k; ++j) acc += j * a[j] * e[k - j];
    e[k] = acc / k;
  }
  return e;
}

// a^r for a[0] > 0 (any real r), or integer r >= 0 for any a[0].
inline Jet pow(const Jet& a, double r) {
  const double ri = std::round(r);
  if (std::abs(r - ri) < 1e-14 && ri >= 0 && ri <= 32) {
    Jet acc = Jet::constant(1.0, a.order()), b = a;
    for (long e = static_cast<long>(ri); e > 0; e >>= 1) {
      if (e & 1) acc = acc * b;
      if (e > 1) b = b * b;
    }
    return acc;
  }
  if (!(a[0] > 0)) throw Error("jet-domain", "real power of a jet needs a positive base value");
  Jet b(a.order());
  b[0] = std::pow(a[0], r);
  for (int k = 1; k <= a.order(); ++k) {
    double acc = 0;
    for (int j = 1; j <= k; ++j) acc += (r * j - (k - j)) * a[j] * b[k - j];
    b[k] = acc / (k * a[0]);
  }
  return b;
}

inline Jet log(const Jet& a) {
  if (!(a[0] > 0)) throw Error("jet-domain", "log of a jet needs a positive base value");
  Jet l = a.d() / a;
  Jet r(a.order());
  r[0] = std::log(a[0]);
  for (int k = 1; k <= a.order(); ++k) r[k] = l[k - 1] / k;
  return r;
}

// Radial Laplacian f'' + (d-1) f'/y at base point y0.  At y0 = 0 the field is
// taken to be even and f'/y is the shifted series of f'.
inline Jet radial_laplacian(const Jet& f, double y0, int d) {
  Jet f1 = f.d();
  Jet f2 = f1.d();
  Jet q(f2.order());
  if (y0 == 0.0) {
    for (int k = 0; k <= q.order(); ++k) q[k] = f1[k + 1];
  } else {
    q = f1 / Jet::variable(y0, f1.order());
  }
  return f2 + (d - 1.0) * q;
}

// Smooth step equal to 1 on [0,1] and 0 on [2, inf), built from exp(-1/t).
inline double smooth_step(double u) {
  auto g = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
  const double a = g(2.0 - u), b = g(u - 1.0);
  return a / (a + b);
}

// Jet of smooth_step(y / M) at y0.
inline Jet cutoff_jet(double y0, double M, int order) {
  const double u0 = y0 / M;
  if (u0 <= 1.0) return Jet::constant(1.0, order);
  if (u0 >= 2.0) return Jet(order);
  Jet u(order);
  u[0] = u0;
  if (order >= 1) u[1] = 1.0 / M;
  auto g = [&](const Jet& t) {
    if (t[0] < 1e-3) return Jet(order);
    return exp(-(Jet::constant(1.0, order) / t));
  };
  Jet a = g(2.0 + (-u)), b = g(u + (-1.0));
  return a / (a + b);
}

// Taylor jets of Q and Lambda Q at grid nodes.  Close to the origin they come
// from the even power series of Q about 0; elsewhere from the ODE itself,
// started from the integrated values at the node.
class GroundStateJets {
 public:
  explicit GroundStateJets(const GroundState& gs, int terms = 120) : gs_(&gs) {
    const auto& P = gs.params;
    const int d = P.d;
    q_.assign(terms + 2, 0.0);
    std::vector<double> pw(terms + 2, 0.0);
    q_[0] = 1.0;
    pw[0] = 1.0;
    for (int k = 0; k < terms; ++k) {
      const double prev = k >= 1 ? pw[k - 1] : 0.0;
      q_[k + 1] = -prev / ((k + 1.0) * (k + d - 1.0));
      const int kk = k + 1;
      double acc = 0;
      for (int j = 1; j <= kk; ++j) acc += (P.p * j - (kk - j)) * q_[j] * pw[kk - j];
      pw[kk] = acc / kk;
    }
    double R = 1e300;
    for (int k = terms / 2; k <= terms; k += 2)
      if (q_[k] != 0.0) R = std::min(R, std::pow(std::abs(q_[k]), -1.0 / k));
    series_radius_ = std::min(0.8, 0.35 * R);
  }

  const GroundState& ground_state() const { return *gs_; }
  double series_radius() const { return series_radius_; }

  Jet Q(std::size_t i, int order) const {
    const double y0 = gs_->grid->y(i);
    if (y0 <= series_radius_) return shifted_series(y0, order, false);
    const auto& P = gs_->params;
    const int d = P.d;
    Jet q(order);
    q[0] = gs_->Q[i];
    if (order >= 1) q[1] = gs_->dQ[i];
    // P_k = (Q^p)_k, filled incrementally from q_0..q_k
    std::vector<double> pw(order + 1, 0.0);
    pw[0] = detail::ipow(q[0], P.p);
    auto fill_pw = [&](int k) {
      double acc = 0;
      for (int j = 1; j <= k; ++j) acc += (P.p * j - (k - j)) * q[j] * pw[k - j];
      pw[k] = acc / (k * q[0]);
    };
    if (order >= 1) fill_pw(1);
    for (int k = 0; k + 2 <= order; ++k) {
      const double prev = k >= 1 ? pw[k - 1] : 0.0;
      q[k + 2] = -((k + 1.0) * (k + d - 1.0) * q[k + 1] + y0 * pw[k] + prev) / (y0 * (k + 2.0) * (k + 1.0));
      fill_pw(k + 2);
    }
    return q;
  }

  Jet LQ(std::size_t i, int order) const {
    const double y0 = gs_->grid->y(i);
    if (y0 <= series_radius_) return shifted_series(y0, order, true);
    const int d = gs_->params.d;
    Jet W = W_plus(i, order);
    Jet f(order);
    f[0] = gs_->LQ[i];
    if (order >= 1) f[1] = gs_->dLQ[i];
    auto wf = [&](int k) {
      double acc = 0;
      for (int j = 0; j <= k; ++j) acc += W[j] * f[k - j];
      return acc;
    };
    for (int k = 0; k + 2 <= order; ++k) {
      const double prev = k >= 1 ? wf(k - 1) : 0.0;
      f[k + 2] = -((k + 1.0) * (k + d - 1.0) * f[k + 1] + y0 * wf(k) + prev) / (y0 * (k + 2.0) * (k + 1.0));
    }
    return f;
  }

  // Jets at an arbitrary radius, re-expanded from the nearest grid node.
  Jet Q_at(double y, int order) const { return at(y, order, false); }
  Jet LQ_at(double y, int order) const { return at(y, order, true); }

  Jet W_minus(std::size_t i, int order) const { return pow(Q(i, order), gs_->params.p - 1.0); }
  Jet W_plus(std::size_t i, int order) const { return gs_->params.p * W_minus(i, order); }

 private:
  Jet at(double y, int order, bool lambda) const {
    const auto& g = *gs_->grid;
    std::size_t i = g.locate(y);
    if (i + 1 < g.size() && g.y(i + 1) - y < y - g.y(i)) ++i;
    const int wide = order + 12;
    Jet base = lambda ? LQ(i, wide) : Q(i, wide);
    return taylor_shift(base, y - g.y(i)).truncated(order);
  }

 public:
  // Re-expands a jet about y0 + s.
  static Jet taylor_shift(Jet a, double s) {
    const int n = a.order();
    for (int j = 0; j <= n; ++j)
      for (int k = n - 1; k >= j; --k) a[k] += s * a[k + 1];
    return a;
  }

 private:
  // Jet at y0 of the series of Q, or of Lambda Q = sum (m + k) q_k y^k.
  Jet shifted_series(double y0, int order, bool lambda) const {
    const int n = static_cast<int>(q_.size());
    std::vector<double> a = q_;
    if (lambda)
      for (int k = 0; k < n; ++k) a[k] *= gs_->params.m + k;
    // Taylor shift by repeated synthetic division (Horner)
    Jet r(order);
    for (int j = 0; j <= order; ++j) {
      for (int k = n - 2; k >= j; --k) a[k] += y0 * a[k + 1];
      r[j] = a[j];
    }
    return r;
  }

  const GroundState* gs_;
  std::vector<double> q_;
  double series_radius_ = 0.5;
};

}  // namespace sclab
