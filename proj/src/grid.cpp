#include "mather/grid.hpp"

#include <vector>

#include <cmath>

namespace mather {

TorusGrid::TorusGrid(int d, int m) : d_(d), m_(m) {
  if (d != 1 && d != 2) throw InputError("grid dimension must be 1 or 2");
  if (m < 4) throw InputError("grid needs at least 4 nodes per dimension");
  h_ = 1.0 / m;
  cell_ = d == 1 ? h_ : h_ * h_;
  n_ = d == 1 ? m : m * m;
}

Vec TorusGrid::node(int index) const {
  Vec x(d_);
  x[0] = (index % m_) * h_;
  if (d_ == 2) x[1] = (index / m_) * h_;
  return x;
}

int TorusGrid::nearest(const Vec& x) const {
  auto idx = [&](double c) {
    long k = std::lround((c - std::floor(c)) * m_);
    return static_cast<int>(((k % m_) + m_) % m_);
  };
  int i = idx(x[0]);
  if (d_ == 2) i += m_ * idx(x[1]);
  return i;
}

namespace {

struct CellCoord {
  int lo;
  int hi;
  double t;
};

CellCoord locate(double c, int m) {
  const double s = (c - std::floor(c)) * m;
  int lo = static_cast<int>(std::floor(s));
  double t = s - lo;
  if (lo >= m) {
    lo = m - 1;
    t = 1.0;
  }
  return {lo, (lo + 1) % m, t};
}

}  // namespace

double GridFunction::interpolate(const Vec& x) const {
  const int m = grid.per_dim();
  const auto cx = locate(x[0], m);
  if (grid.dim() == 1) return (1.0 - cx.t) * values[cx.lo] + cx.t * values[cx.hi];
  const auto cy = locate(x[1], m);
  const double v00 = values[cx.lo + m * cy.lo];
  const double v10 = values[cx.hi + m * cy.lo];
  const double v01 = values[cx.lo + m * cy.hi];
  const double v11 = values[cx.hi + m * cy.hi];
  return (1 - cx.t) * (1 - cy.t) * v00 + cx.t * (1 - cy.t) * v10 + (1 - cx.t) * cy.t * v01 +
         cx.t * cy.t * v11;
}

Vec GridFunction::interpolate_gradient(const Vec& x) const {
  const int m = grid.per_dim();
  const double inv_h = m;
  const auto cx = locate(x[0], m);
  Vec g(grid.dim());
  if (grid.dim() == 1) {
    g[0] = (values[cx.hi] - values[cx.lo]) * inv_h;
    return g;
  }
  const auto cy = locate(x[1], m);
  const double v00 = values[cx.lo + m * cy.lo];
  const double v10 = values[cx.hi + m * cy.lo];
  const double v01 = values[cx.lo + m * cy.hi];
  const double v11 = values[cx.hi + m * cy.hi];
  g[0] = ((1 - cy.t) * (v10 - v00) + cy.t * (v11 - v01)) * inv_h;
  g[1] = ((1 - cx.t) * (v01 - v00) + cx.t * (v11 - v10)) * inv_h;
  return g;
}

Vec wrap(const Vec& x) {
  Vec r = x;
  for (int i = 0; i < r.size(); ++i) r[i] -= std::floor(r[i]);
  return r;
}

double torus_distance(const Vec& x, const Vec& y) {
  double d = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double t = x[i] - y[i];
    t -= std::round(t);
    d = std::max(d, std::abs(t));
  }
  return d;
}

std::vector<Vec> lattice_translates(int d, int r) {
  std::vector<Vec> out;
  if (d == 1) {
    for (int a = -r; a <= r; ++a) out.push_back(Vec::Constant(1, a));
  } else {
    for (int b = -r; b <= r; ++b)
      for (int a = -r; a <= r; ++a) {
        Vec n(2);
        n << a, b;
        out.push_back(n);
      }
  }
  return out;
}

}  // namespace mather
