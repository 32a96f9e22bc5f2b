#include <doctest.h>

#include <omp.h>

#include <random>

#include "mather/kernels.hpp"

using namespace mather;
using kernels::Exec;
using kernels::IndexMatrix;
using kernels::RowMatrix;

namespace {

RowMatrix random_matrix(std::mt19937_64& g, int r, int c) {
  std::uniform_real_distribution<double> u(-1, 1);
  RowMatrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = u(g);
  return m;
}

DenseVector random_vector(std::mt19937_64& g, int n) {
  std::uniform_real_distribution<double> u(-1, 1);
  DenseVector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(g);
  return v;
}

bool bitwise_equal(const DenseVector& a, const DenseVector& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

TEST_CASE("dense products agree with Eigen and serial equals parallel bitwise") {
  omp_set_num_threads(4);
  std::mt19937_64 g(1);
  const RowMatrix k = random_matrix(g, 97, 97);
  const DenseVector x = random_vector(g, 97);
  DenseVector ys, yp, ls, lp;
  kernels::matvec(k, x, ys, Exec::Serial);
  kernels::matvec(k, x, yp, Exec::Parallel);
  kernels::left_matvec(k, x, ls, Exec::Serial);
  kernels::left_matvec(k, x, lp, Exec::Parallel);
  CHECK(bitwise_equal(ys, yp));
  CHECK(bitwise_equal(ls, lp));
  CHECK((ys - k * x).norm() < 1e-12);
  CHECK((ls - k.transpose() * x).norm() < 1e-12);
}

TEST_CASE("min-plus and max-plus matvecs match brute force with lowest-index ties") {
  omp_set_num_threads(4);
  std::mt19937_64 g(2);
  RowMatrix c = random_matrix(g, 40, 40);
  DenseVector u = random_vector(g, 40);
  // plant a tie for column 5 between rows 3 and 11
  c(3, 5) = -10.0 - u[3];
  c(11, 5) = -10.0 - u[11];
  DenseVector out_s, out_p;
  Eigen::VectorXi arg_s, arg_p;
  kernels::minplus_columns(c, u, out_s, &arg_s, Exec::Serial);
  kernels::minplus_columns(c, u, out_p, &arg_p, Exec::Parallel);
  CHECK(bitwise_equal(out_s, out_p));
  CHECK(arg_s == arg_p);
  for (int i = 0; i < 40; ++i) {
    double best = 1e300;
    int arg = -1;
    for (int j = 0; j < 40; ++j)
      if (u[j] + c(j, i) < best) best = u[j] + c(j, i), arg = j;
    CHECK(out_s[i] == best);
    CHECK(arg_s[i] == arg);
  }
  CHECK(arg_s[5] == 3);

  kernels::maxplus_rows(c, u, out_s, &arg_s, Exec::Serial);
  kernels::maxplus_rows(c, u, out_p, nullptr, Exec::Parallel);
  CHECK(bitwise_equal(out_s, out_p));
  for (int i = 0; i < 40; ++i) {
    double best = -1e300;
    for (int j = 0; j < 40; ++j) best = std::max(best, u[j] - c(i, j));
    CHECK(out_s[i] == best);
  }
}

TEST_CASE("min-plus matrix product matches brute force") {
  omp_set_num_threads(3);
  std::mt19937_64 g(3);
  const RowMatrix a = random_matrix(g, 23, 31);
  const RowMatrix b = random_matrix(g, 31, 17);
  RowMatrix os, op;
  IndexMatrix as, ap;
  kernels::minplus_product(a, b, os, as, Exec::Serial);
  kernels::minplus_product(a, b, op, ap, Exec::Parallel);
  CHECK(os == op);
  CHECK(as == ap);
  for (int x = 0; x < 23; ++x)
    for (int z = 0; z < 17; ++z) {
      double best = 1e300;
      int arg = -1;
      for (int y = 0; y < 31; ++y)
        if (a(x, y) + b(y, z) < best) best = a(x, y) + b(y, z), arg = y;
      CHECK(os(x, z) == best);
      CHECK(as(x, z) == arg);
    }
}

TEST_CASE("fill is identical in both execution modes") {
  omp_set_num_threads(4);
  RowMatrix s(50, 60), p(50, 60);
  auto f = [](int i, int j) { return std::sin(0.1 * i) * std::exp(-0.01 * j * j); };
  kernels::fill(s, f, Exec::Serial);
  kernels::fill(p, f, Exec::Parallel);
  CHECK(s == p);
}
