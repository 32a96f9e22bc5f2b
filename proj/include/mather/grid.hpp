#pragma once

#include <cstddef>
#include <vector>

#include "mather/types.hpp"

namespace mather {

/// Uniform periodic grid on [0,1)^d with m nodes per dimension.
/// Node index i = i0 + m*i1 (d = 2).
class TorusGrid {
 public:
  TorusGrid(int d, int m);

  int dim() const { return d_; }
  int per_dim() const { return m_; }
  double spacing() const { return h_; }
  /// h^d, the quadrature weight of one node.
  double cell_volume() const { return cell_; }
  int size() const { return n_; }

  Vec node(int index) const;
  /// Nearest node to x mod 1.
  int nearest(const Vec& x) const;

 private:
  int d_;
  int m_;
  double h_;
  double cell_;
  int n_;
};

/// Real values on the nodes of a TorusGrid.
struct GridFunction {
  GridFunction(const TorusGrid& g, DenseVector v) : grid(g), values(std::move(v)) {}
  explicit GridFunction(const TorusGrid& g) : grid(g), values(DenseVector::Zero(g.size())) {}

  TorusGrid grid;
  DenseVector values;

  double operator[](int i) const { return values[i]; }
  /// Periodic piecewise-(bi)linear interpolation.
  double interpolate(const Vec& x) const;
  /// Gradient of the interpolant (one-sided inside the containing cell).
  Vec interpolate_gradient(const Vec& x) const;
};

/// Reduce to [0,1) componentwise.
Vec wrap(const Vec& x);
/// Periodic distance on the torus (sup over components of the wrapped difference).
double torus_distance(const Vec& x, const Vec& y);

/// Integer translates with |n|_inf <= r, lowest index first (first coordinate fastest).
std::vector<Vec> lattice_translates(int d, int r);

}  // namespace mather
