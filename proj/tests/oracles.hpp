#pragma once

// Reference computations used only by the tests.

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "mather/potential.hpp"
#include "mather/types.hpp"

namespace oracle {

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline mather::Vec vec(double a) { return mather::Vec::Constant(1, a); }
inline mather::Vec vec(double a, double b) {
  mather::Vec v(2);
  v << a, b;
  return v;
}

/// Random trig potential with |a_k|, |b_k| <= amp and frequencies in [-kmax, kmax].
inline mather::TrigPotential random_potential(std::mt19937_64& g, int d, int modes, double amp, int kmax = 2) {
  std::uniform_real_distribution<double> c(-amp, amp);
  std::uniform_int_distribution<int> k(-kmax, kmax);
  std::vector<mather::FourierMode> m;
  for (int i = 0; i < modes; ++i) {
    mather::FourierMode f;
    f.k = {k(g), d == 2 ? k(g) : 0};
    if (f.k[0] == 0 && f.k[1] == 0) f.k[0] = 1;
    f.a = c(g);
    f.b = c(g);
    m.push_back(f);
  }
  return mather::TrigPotential(d, m);
}

inline mather::Vec random_point(std::mt19937_64& g, int d, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  mather::Vec x(d);
  for (int i = 0; i < d; ++i) x[i] = u(g);
  return x;
}

/// log|det| and sign by dense partial-pivot LU.
inline std::pair<int, double> dense_logdet(const Eigen::MatrixXd& a) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::MatrixXd& u = lu.matrixLU();
  int sign = static_cast<int>(lu.permutationP().determinant());
  double l = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    if (u(i, i) < 0) sign = -sign;
    l += std::log(std::abs(u(i, i)));
  }
  return {sign, l};
}

}  // namespace oracle
