#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an OpenMP
// version; the parallel version splits work over output entries only and each
// output entry is accumulated in the same order as the serial loop, so results
// are bitwise identical for any thread count.

#include <Eigen/Core>

#include "mather/types.hpp"

namespace mather::kernels {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Exec { Serial, Parallel };

namespace serial {
/// y = K x
void matvec(const RowMatrix& k, const DenseVector& x, DenseVector& y);
/// y = K^T x, i.e. y_j = sum_i x_i K_ij
void left_matvec(const RowMatrix& k, const DenseVector& x, DenseVector& y);
/// out_i = min_j (u_j + c_ji), ties to the lowest j; arg may be null.
void minplus_columns(const RowMatrix& c, const DenseVector& u, DenseVector& out, Eigen::VectorXi* arg);
/// out_i = max_j (u_j - c_ij), ties to the lowest j.
void maxplus_rows(const RowMatrix& c, const DenseVector& u, DenseVector& out, Eigen::VectorXi* arg);
/// out_xz = min_y (a_xy + b_yz), ties to the lowest y.
void minplus_product(const RowMatrix& a, const RowMatrix& b, RowMatrix& out, IndexMatrix& arg);
}  // namespace serial

namespace parallel {
void matvec(const RowMatrix& k, const DenseVector& x, DenseVector& y);
void left_matvec(const RowMatrix& k, const DenseVector& x, DenseVector& y);
void minplus_columns(const RowMatrix& c, const DenseVector& u, DenseVector& out, Eigen::VectorXi* arg);
void maxplus_rows(const RowMatrix& c, const DenseVector& u, DenseVector& out, Eigen::VectorXi* arg);
void minplus_product(const RowMatrix& a, const RowMatrix& b, RowMatrix& out, IndexMatrix& arg);
}  // namespace parallel

inline void matvec(const RowMatrix& k, const DenseVector& x, DenseVector& y, Exec e = Exec::Parallel) {
  e == Exec::Serial ? serial::matvec(k, x, y) : parallel::matvec(k, x, y);
}
inline void left_matvec(const RowMatrix& k, const DenseVector& x, DenseVector& y, Exec e = Exec::Parallel) {
  e == Exec::Serial ? serial::left_matvec(k, x, y) : parallel::left_matvec(k, x, y);
}
inline void minplus_columns(const RowMatrix& c, const DenseVector& u, DenseVector& out,
                            Eigen::VectorXi* arg = nullptr, Exec e = Exec::Parallel) {
  e == Exec::Serial ? serial::minplus_columns(c, u, out, arg) : parallel::minplus_columns(c, u, out, arg);
}
inline void maxplus_rows(const RowMatrix& c, const DenseVector& u, DenseVector& out,
                         Eigen::VectorXi* arg = nullptr, Exec e = Exec::Parallel) {
  e == Exec::Serial ? serial::maxplus_rows(c, u, out, arg) : parallel::maxplus_rows(c, u, out, arg);
}
inline void minplus_product(const RowMatrix& a, const RowMatrix& b, RowMatrix& out, IndexMatrix& arg,
                            Exec e = Exec::Parallel) {
  e == Exec::Serial ? serial::minplus_product(a, b, out, arg) : parallel::minplus_product(a, b, out, arg);
}

/// Fill m(i, j) = f(i, j) row by row.
template <class F>
void fill(RowMatrix& m, F&& f, Exec e = Exec::Parallel) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  if (e == Exec::Serial) {
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = f(static_cast<int>(i), static_cast<int>(j));
    return;
  }
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = f(static_cast<int>(i), static_cast<int>(j));
}

}  // namespace mather::kernels
