#include "mather/kernels.hpp"

#include <limits>

namespace mather::kernels {

namespace {

inline double row_dot(const RowMatrix& k, Eigen::Index i, const DenseVector& x) {
  const double* row = k.data() + i * k.cols();
  double s = 0.0;
  for (Eigen::Index j = 0; j < k.cols(); ++j) s += row[j] * x[j];
  return s;
}

inline double column_dot(const RowMatrix& k, Eigen::Index j, const DenseVector& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < k.rows(); ++i) s += x[i] * k(i, j);
  return s;
}

inline void minplus_entry(const RowMatrix& c, const DenseVector& u, Eigen::Index i, double& best, int& arg) {
  best = std::numeric_limits<double>::infinity();
  arg = -1;
  for (Eigen::Index j = 0; j < c.rows(); ++j) {
    const double v = u[j] + c(j, i);
    if (v < best) {
      best = v;
      arg = static_cast<int>(j);
    }
  }
}

inline void maxplus_entry(const RowMatrix& c, const DenseVector& u, Eigen::Index i, double& best, int& arg) {
  best = -std::numeric_limits<double>::infinity();
  arg = -1;
  const double* row = c.data() + i * c.cols();
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    const double v = u[j] - row[j];
    if (v > best) {
      best = v;
      arg = static_cast<int>(j);
    }
  }
}

inline void minplus_row(const RowMatrix& a, const RowMatrix& b, Eigen::Index x, RowMatrix& out, IndexMatrix& arg) {
  const Eigen::Index n = b.cols();
  double* o = out.data() + x * n;
  int* g = arg.data() + x * n;
  for (Eigen::Index z = 0; z < n; ++z) {
    o[z] = std::numeric_limits<double>::infinity();
    g[z] = -1;
  }
  // y outer, z inner: contiguous access; strict < keeps the lowest y on ties.
  for (Eigen::Index y = 0; y < a.cols(); ++y) {
    const double axy = a(x, y);
    const double* brow = b.data() + y * n;
    for (Eigen::Index z = 0; z < n; ++z) {
      const double v = axy + brow[z];
      if (v < o[z]) {
        o[z] = v;
        g[z] = static_cast<int>(y);
      }
    }
  }
}

void prepare(const RowMatrix& a, const RowMatrix& b, RowMatrix& out, IndexMatrix& arg) {
  out.resize(a.rows(), b.cols());
  arg.resize(a.rows(), b.cols());
}

}  // namespace

namespace serial {

void matvec(const RowMatrix& k, const DenseVector& x, DenseVector& y) {
  y.resize(k.rows());
  for (Eigen::Index i = 0; i < k.rows(); ++i) y[i] = row_dot(k, i, x);
}

void left_matvec(const RowMatrix& k, const DenseVector& x, DenseVector& y) {
  y.resize(k.cols());
  for (Eigen::Index j = 0; j < k.cols(); ++j) y[j] = column_dot(k, j, x);
}

void minplus_columns(const RowMatrix& c, const DenseVector& u, DenseVector& out, Eigen::VectorXi* arg) {
  out.resize(c.cols());
  if (arg) arg->resize(c.cols());
  for (Eigen::Index i = 0; i < c.cols(); ++i) {
    int a;
    minplus_entry(c, u, i, out[i], a);
    if (arg) (*arg)[i] = a;
  }
}

void maxplus_rows(const RowMatrix& c, const DenseVector& u, DenseVector& out, Eigen::VectorXi* arg) {
  out.resize(c.rows());
  if (arg) arg->resize(c.rows());
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    int a;
    maxplus_entry(c, u, i, out[i], a);
    if (arg) (*arg)[i] = a;
  }
}

void minplus_product(const RowMatrix& a, const RowMatrix& b, RowMatrix& out, IndexMatrix& arg) {
  prepare(a, b, out, arg);
  for (Eigen::Index x = 0; x < a.rows(); ++x) minplus_row(a, b, x, out, arg);
}

}  // namespace serial

namespace parallel {

void matvec(const RowMatrix& k, const DenseVector& x, DenseVector& y) {
  y.resize(k.rows());
  const Eigen::Index n = k.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) y[i] = row_dot(k, i, x);
}

void left_matvec(const RowMatrix& k, const DenseVector& x, DenseVector& y) {
  y.resize(k.cols());
  const Eigen::Index n = k.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) y[j] = column_dot(k, j, x);
}

void minplus_columns(const RowMatrix& c, const DenseVector& u, DenseVector& out, Eigen::VectorXi* arg) {
  out.resize(c.cols());
  if (arg) arg->resize(c.cols());
  const Eigen::Index n = c.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    int a;
    minplus_entry(c, u, i, out[i], a);
    if (arg) (*arg)[i] = a;
  }
}

void maxplus_rows(const RowMatrix& c, const DenseVector& u, DenseVector& out, Eigen::VectorXi* arg) {
  out.resize(c.rows());
  if (arg) arg->resize(c.rows());
  const Eigen::Index n = c.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    int a;
    maxplus_entry(c, u, i, out[i], a);
    if (arg) (*arg)[i] = a;
  }
}

void minplus_product(const RowMatrix& a, const RowMatrix& b, RowMatrix& out, IndexMatrix& arg) {
  prepare(a, b, out, arg);
  const Eigen::Index n = a.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index x = 0; x < n; ++x) minplus_row(a, b, x, out, arg);
}

}  // namespace parallel

}  // namespace mather::kernels
