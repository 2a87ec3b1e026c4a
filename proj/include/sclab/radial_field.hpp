#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "grid.hpp"

namespace sclab {

// Samples of a real radial function on a shared grid.
struct RadialField {
  GridPtr grid;
  std::vector<double> v;
  Parity parity = Parity::even;
  int d = 0;

  RadialField() = default;
  RadialField(GridPtr g, int dim, Parity par = Parity::even)
      : grid(std::move(g)), v(grid->size(), 0.0), parity(par), d(dim) {}
  RadialField(GridPtr g, int dim, std::vector<double> values, Parity par = Parity::even)
      : grid(std::move(g)), v(std::move(values)), parity(par), d(dim) {
    grid->check(v);
  }

  template <class F>
  static RadialField sample(GridPtr g, int dim, F&& f, Parity par = Parity::even) {
    RadialField r(g, dim, par);
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] = f(g->y(i));
    return r;
  }

  std::size_t size() const { return v.size(); }
  double operator[](std::size_t i) const { return v[i]; }
  double& operator[](std::size_t i) { return v[i]; }
  const std::vector<double>& y() const { return grid->y(); }

  double max_abs() const {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  bool is_zero() const { return max_abs() == 0.0; }
  double at(double yq) const { return grid->interpolate(v, parity, yq); }

  RadialField derivative() const {
    return RadialField(grid, d, grid->derivative(v, parity), parity == Parity::even ? Parity::odd : Parity::even);
  }
  RadialField laplacian() const { return RadialField(grid, d, grid->laplacian(v, d), Parity::even); }
};

inline void require_same_grid(const RadialField& a, const RadialField& b) {
  if (a.grid != b.grid) throw Error("grid-mismatch", "fields live on different grids");
}

inline RadialField operator+(RadialField a, const RadialField& b) {
  require_same_grid(a, b);
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}
inline RadialField operator-(RadialField a, const RadialField& b) {
  require_same_grid(a, b);
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] -= b.v[i];
  return a;
}
inline RadialField operator*(double c, RadialField a) {
  for (double& x : a.v) x *= c;
  return a;
}
inline RadialField operator-(RadialField a) { return -1.0 * std::move(a); }

// Pointwise product; the parity is the product of the parities.
inline RadialField mul(const RadialField& a, const RadialField& b) {
  require_same_grid(a, b);
  RadialField r = a;
  for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] *= b.v[i];
  r.parity = (a.parity == b.parity) ? Parity::even : Parity::odd;
  return r;
}

// int f g y^{d-1} dy
inline double inner(const RadialField& f, const RadialField& g) {
  RadialField fg = mul(f, g);
  return f.grid->integral(fg.v, fg.parity, f.d - 1.0);
}

// A complex radial field stored as (Re, Im) on a shared grid.
struct ComplexPair {
  RadialField re, im;

  ComplexPair() = default;
  ComplexPair(RadialField r, RadialField i) : re(std::move(r)), im(std::move(i)) { require_same_grid(re, im); }
  static ComplexPair zero(GridPtr g, int d) { return {RadialField(g, d), RadialField(g, d)}; }

  const GridPtr& grid() const { return re.grid; }
  int d() const { return re.d; }
  double max_abs() const {
    double m = 0;
    for (std::size_t i = 0; i < re.size(); ++i) m = std::max(m, std::hypot(re.v[i], im.v[i]));
    return m;
  }
};

inline ComplexPair operator+(const ComplexPair& a, const ComplexPair& b) { return {a.re + b.re, a.im + b.im}; }
inline ComplexPair operator-(const ComplexPair& a, const ComplexPair& b) { return {a.re - b.re, a.im - b.im}; }
inline ComplexPair operator*(double c, const ComplexPair& a) { return {c * a.re, c * a.im}; }

// Multiplication by i: (f1, f2) -> (-f2, f1).
inline ComplexPair J(const ComplexPair& u) { return {-u.im, u.re}; }

inline ComplexPair scale_by(const RadialField& w, const ComplexPair& u) { return {mul(w, u.re), mul(w, u.im)}; }

// Real inner product (u, v) = Re int u conj(v) y^{d-1} dy.
inline double inner(const ComplexPair& u, const ComplexPair& v) { return inner(u.re, v.re) + inner(u.im, v.im); }

}  // namespace sclab
