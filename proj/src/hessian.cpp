#include "mather/hessian.hpp"

#include <algorithm>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

namespace mather {

namespace {

constexpr double kPivotThreshold = 1e-12;

double block_scale(const Mat& m, int d) { return std::pow(std::max(1.0, m.cwiseAbs().maxCoeff()), d); }

int sign_of(double x) { return x < 0 ? -1 : 1; }

// Accumulates a product of frames F_k = Q_k R_k ... R_1 without overflow.
struct FramePropagator {
  explicit FramePropagator(int d) : d(d), frame(PhaseMat::Zero(2 * d, d)), r_acc(Mat::Identity(d, d)) {
    frame.block(d, 0, d, d) = Mat::Identity(d, d);
  }

  void apply(const PhaseMat& step) {
    PhaseMat z = step * frame;
    Eigen::HouseholderQR<PhaseMat> qr(z);
    PhaseMat q = qr.householderQ() * PhaseMat::Identity(2 * d, d);
    Mat r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i) {
      if (r(i, i) < 0) {
        r.row(i) *= -1.0;
        q.col(i) *= -1.0;
      }
      log_r += std::log(std::abs(r(i, i)));
      if (r(i, i) == 0.0) degenerate = true;
    }
    frame = q;
    r_acc = r * r_acc;
    const double s = r_acc.cwiseAbs().maxCoeff();
    if (s > 0) {
      r_acc /= s;
      log_scale += std::log(s);
    }
  }

  Monodromy result() const {
    Monodromy m;
    const Mat lower = frame.block(d, 0, d, d);
    m.scaled = lower * r_acc;
    m.log_scale = log_scale;
    const double dq = lower.determinant();
    if (dq == 0.0 || degenerate) {
      m.det.conjugate_point = true;
      m.det.log_abs = -std::numeric_limits<double>::infinity();
    } else {
      m.det.sign = sign_of(dq);
      m.det.log_abs = std::log(std::abs(dq)) + log_r;
    }
    return m;
  }

  int d;
  PhaseMat frame;
  Mat r_acc;
  double log_scale = 0.0;
  double log_r = 0.0;
  bool degenerate = false;
};

void require_path(const Orbit& path, int min_points, const char* what) {
  if (static_cast<int>(path.points.size()) < min_points)
    throw InputError(fmt::format("{} needs at least {} points", what, min_points));
}

}  // namespace

DenseMatrix BlockTridiagonal::to_dense() const {
  const int n = blocks();
  DenseMatrix m = DenseMatrix::Zero(n * d, n * d);
  for (int k = 0; k < n; ++k) {
    m.block(k * d, k * d, d, d) = diag[k];
    if (k + 1 < n) {
      m.block(k * d, (k + 1) * d, d, d) = off[k];
      m.block((k + 1) * d, k * d, d, d) = off[k].transpose();
    }
  }
  return m;
}

BlockTridiagonal BlockTridiagonal::principal(int first, int count) const {
  if (first < 0 || count < 1 || first + count > blocks()) throw InputError("principal block range out of bounds");
  BlockTridiagonal b{d, {diag.begin() + first, diag.begin() + first + count}, {}};
  b.off.assign(off.begin() + first, off.begin() + first + count - 1);
  return b;
}

BlockTridiagonal assemble_hessian(const Lagrangian& lag, const Orbit& path) {
  require_path(path, 3, "assemble_hessian");
  const auto& g = path.points;
  const int n = static_cast<int>(g.size()) - 2;
  BlockTridiagonal b{lag.dim(), {}, {}};
  b.diag.reserve(n);
  b.off.reserve(n > 0 ? n - 1 : 0);
  for (int i = 1; i <= n; ++i) {
    b.diag.push_back(lag.d22(g[i - 1], g[i]) + lag.d11(g[i], g[i + 1]));
    if (i < n) b.off.push_back(lag.d12(g[i], g[i + 1]));
  }
  return b;
}

LogDet dense_determinant(const DenseMatrix& m) {
  Eigen::PartialPivLU<DenseMatrix> lu(m);
  const DenseMatrix& u = lu.matrixLU();
  LogDet r;
  r.sign = static_cast<int>(lu.permutationP().determinant());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    if (u(i, i) == 0.0) {
      r.conjugate_point = true;
      r.log_abs = -std::numeric_limits<double>::infinity();
      return r;
    }
    r.sign *= sign_of(u(i, i));
    r.log_abs += std::log(std::abs(u(i, i)));
  }
  return r;
}

LogDet banded_determinant(const BlockTridiagonal& b) {
  const int d = b.d;
  const int n = b.size();
  const int kl = 2 * d - 1;
  const int ku = 2 * d - 1;
  const int width = 2 * kl + ku + 1;
  // row i holds columns i - kl .. i + kl + ku (room for pivoting fill-in)
  std::vector<double> a(static_cast<std::size_t>(n) * width, 0.0);
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * width + (j - i + kl)]; };
  for (int k = 0; k < b.blocks(); ++k)
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        at(k * d + r, k * d + c) = b.diag[k](r, c);
        if (k + 1 < b.blocks()) {
          at(k * d + r, (k + 1) * d + c) = b.off[k](r, c);
          at((k + 1) * d + c, k * d + r) = b.off[k](r, c);
        }
      }
  LogDet out;
  out.pivoted = true;
  for (int k = 0; k < n; ++k) {
    const int last_row = std::min(n - 1, k + kl);
    const int last_col = std::min(n - 1, k + kl + ku);
    int p = k;
    for (int i = k + 1; i <= last_row; ++i)
      if (std::abs(at(i, k)) > std::abs(at(p, k))) p = i;
    if (at(p, k) == 0.0) {
      out.conjugate_point = true;
      out.log_abs = -std::numeric_limits<double>::infinity();
      return out;
    }
    if (p != k) {
      for (int j = k; j <= last_col; ++j) std::swap(at(k, j), at(p, j));
      out.sign = -out.sign;
    }
    const double piv = at(k, k);
    for (int i = k + 1; i <= last_row; ++i) {
      const double f = at(i, k) / piv;
      if (f == 0.0) continue;
      for (int j = k; j <= last_col; ++j) at(i, j) -= f * at(k, j);
    }
    out.sign *= sign_of(piv);
    out.log_abs += std::log(std::abs(piv));
  }
  return out;
}

LogDet block_determinant(const BlockTridiagonal& b, std::vector<double>* prefix) {
  const int n = b.blocks();
  if (n == 0) return {};
  if (prefix) prefix->assign(n, 0.0);
  LogDet out;
  Mat dk = b.diag[0];
  bool fallback = false;
  int singular_at = -1;
  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      const Mat& c = b.off[k - 1];
      Eigen::PartialPivLU<Mat> lu(dk);
      dk = b.diag[k] - c.transpose() * lu.solve(c);
    }
    const double det = dk.determinant();
    if (det == 0.0) {
      singular_at = k;
      fallback = true;
      break;
    }
    if (std::abs(det) < kPivotThreshold * block_scale(b.diag[k], b.d)) fallback = true;
    out.sign *= sign_of(det);
    out.log_abs += std::log(std::abs(det));
    if (prefix) (*prefix)[k] = out.log_abs;
  }
  if (!fallback) return out;
  if (prefix && singular_at >= 0)
    for (int k = singular_at; k < n; ++k) (*prefix)[k] = banded_determinant(b.principal(0, k + 1)).log_abs;
  return banded_determinant(b);
}

std::vector<Vec> block_tridiagonal_solve(const BlockTridiagonal& b, const std::vector<Vec>& rhs) {
  const int n = b.blocks();
  if (static_cast<int>(rhs.size()) != n) throw InputError("right-hand side has the wrong number of blocks");
  std::vector<Eigen::PartialPivLU<Mat>> lus;
  lus.reserve(n);
  std::vector<Vec> y(n);
  Mat dk = b.diag[0];
  y[0] = rhs[0];
  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      const Mat& c = b.off[k - 1];
      dk = b.diag[k] - c.transpose() * lus.back().solve(c);
      y[k] = rhs[k] - c.transpose() * lus.back().solve(y[k - 1]);
    }
    if (std::abs(dk.determinant()) < kPivotThreshold * block_scale(b.diag[k], b.d))
      throw NumericalError("hessian", fmt::format("singular pivot block {} in block elimination", k));
    lus.emplace_back(dk);
  }
  std::vector<Vec> x(n);
  x[n - 1] = lus[n - 1].solve(y[n - 1]);
  for (int k = n - 2; k >= 0; --k) x[k] = lus[k].solve(y[k] - b.off[k] * x[k + 1]);
  return x;
}

Monodromy monodromy_map(const DiscreteLagrangian& lag, const Orbit& orbit) {
  require_path(orbit, 2, "monodromy_map");
  FramePropagator fp(lag.dim());
  const int n = orbit.steps();
  for (int k = 1; k < n; ++k) fp.apply(twist_jacobian(lag, orbit.points[k]));
  return fp.result();
}

Monodromy monodromy_map(const Lagrangian& lag, const Orbit& orbit) {
  require_path(orbit, 2, "monodromy_map");
  const int d = lag.dim();
  const auto& g = orbit.points;
  FramePropagator fp(d);
  const int n = orbit.steps();
  for (int k = 1; k < n; ++k) {
    const Mat c_prev = lag.d12(g[k - 1], g[k]);
    const Mat c = lag.d12(g[k], g[k + 1]);
    const Mat bkk = lag.d22(g[k - 1], g[k]) + lag.d11(g[k], g[k + 1]);
    Eigen::PartialPivLU<Mat> lu(c);
    PhaseMat t = PhaseMat::Zero(2 * d, 2 * d);
    t.block(0, d, d, d) = Mat::Identity(d, d);
    t.block(d, 0, d, d) = -lu.solve(Mat(c_prev.transpose()));
    t.block(d, d, d, d) = -lu.solve(bkk);
    fp.apply(t);
  }
  return fp.result();
}

LogDet monodromy_prefactor(const Lagrangian& lag, const Orbit& orbit) {
  require_path(orbit, 2, "monodromy_prefactor");
  const int d = lag.dim();
  const int n = orbit.steps();
  LogDet p;
  p.sign = ((n - 1) * d) % 2 == 0 ? 1 : -1;
  for (int k = 1; k <= n - 1; ++k) {
    const double dc = lag.d12(orbit.points[k], orbit.points[k + 1]).determinant();
    if (dc == 0.0) throw NumericalError("hessian", "degenerate mixed partial d12 L");
    p.sign *= sign_of(dc);
    p.log_abs -= std::log(std::abs(dc));
  }
  return p;
}

double LyapunovSpectrum::pairing_error() const { return std::abs(std::accumulate(full.begin(), full.end(), 0.0)); }

double LyapunovSpectrum::positive_sum() const { return std::accumulate(positive.begin(), positive.end(), 0.0); }

namespace {

struct QrCocycle {
  explicit QrCocycle(int d) : d(d), q(PhaseMat::Identity(2 * d, 2 * d)), sums(2 * d, 0.0) {}

  void apply(const PhaseMat& j) {
    Eigen::HouseholderQR<PhaseMat> qr(PhaseMat(j * q));
    q = qr.householderQ();
    const PhaseMat& r = qr.matrixQR();
    for (int i = 0; i < 2 * d; ++i) {
      if (r(i, i) < 0) q.col(i) *= -1.0;
      sums[i] += std::log(std::abs(r(i, i)));
    }
    ++steps;
  }

  double positive_sum_now() const {
    std::vector<double> s = sums;
    std::sort(s.begin(), s.end(), std::greater<>());
    return std::accumulate(s.begin(), s.begin() + d, 0.0) / std::max(steps, 1);
  }

  LyapunovSpectrum result() const {
    LyapunovSpectrum out;
    out.steps = steps;
    for (double s : sums) out.full.push_back(s / std::max(steps, 1));
    std::sort(out.full.begin(), out.full.end(), std::greater<>());
    out.positive.assign(out.full.begin(), out.full.begin() + d);
    for (double x : out.full)
      if (!std::isfinite(x)) throw NumericalError("hessian", "Lyapunov sums are not finite");
    return out;
  }

  int d;
  PhaseMat q;
  std::vector<double> sums;
  int steps = 0;
};

}  // namespace

LyapunovSpectrum lyapunov_exponents(const DiscreteLagrangian& lag, const PhasePoint& start, int n,
                                    int history_every) {
  if (n < 100) throw InputError("lyapunov_exponents needs n >= 100");
  const int d = lag.dim();
  QrCocycle cocycle(d);
  std::vector<double> history;
  Vec x0 = start.x;
  Vec x1 = start.v;
  for (int k = 0; k < n; ++k) {
    cocycle.apply(twist_jacobian(lag, x1));
    const Vec x2 = 2.0 * x1 - x0 - lag.potential().gradient(x1);
    if (!x2.allFinite()) throw NumericalError("hessian", "orbit escaped to non-finite values");
    Vec shift(d);
    for (int i = 0; i < d; ++i) shift[i] = std::floor(x2[i]);
    x0 = x1 - shift;
    x1 = x2 - shift;
    if (history_every > 0 && (k + 1) % history_every == 0) history.push_back(cocycle.positive_sum_now());
  }
  auto out = cocycle.result();
  out.history = std::move(history);
  return out;
}

LyapunovSpectrum lyapunov_exponents(const DiscreteLagrangian& lag, const Orbit& orbit, int history_every) {
  require_path(orbit, 3, "lyapunov_exponents");
  QrCocycle cocycle(lag.dim());
  std::vector<double> history;
  for (int k = 1; k < orbit.steps(); ++k) {
    cocycle.apply(twist_jacobian(lag, orbit.points[k]));
    if (history_every > 0 && k % history_every == 0) history.push_back(cocycle.positive_sum_now());
  }
  auto out = cocycle.result();
  out.history = std::move(history);
  return out;
}

ThoulessResult thouless_limit(const Lagrangian& lag, const Orbit& orbit) {
  const auto h = assemble_hessian(lag, orbit);
  ThoulessResult r;
  r.n = h.blocks();
  std::vector<double> prefix;
  const LogDet det = block_determinant(h, &prefix);
  r.conjugate_point = det.conjugate_point;
  r.value = det.log_abs / r.n;
  r.running.resize(r.n);
  for (int k = 0; k < r.n; ++k) r.running[k] = prefix[k] / (k + 1);
  return r;
}

SubadditivityResult subadditivity_check(const Lagrangian& lag, const Orbit& orbit, int m) {
  const auto h = assemble_hessian(lag, orbit);
  const int n = h.blocks();
  if (m < 1 || m >= n) throw InputError("split index must satisfy 1 <= m < number of interior points");
  const LogDet whole = block_determinant(h);
  const LogDet left = block_determinant(h.principal(0, m));
  const LogDet right = block_determinant(h.principal(m, n - m));
  SubadditivityResult r;
  r.slack = left.log_abs + right.log_abs - whole.log_abs;
  r.holds = r.slack >= -1e-9 && whole.sign > 0 && left.sign > 0 && right.sign > 0 && !whole.conjugate_point;
  return r;
}

double tridiag_inverse_radius(double alpha) {
  if (!(alpha > 0.0)) throw InputError("alpha must be positive");
  const double q = 2.0 * alpha * alpha / (1.0 + std::sqrt(1.0 + 4.0 * alpha * alpha * alpha * alpha));
  const double ratio = std::sqrt(q);
  if (!(ratio < 1.0)) throw NumericalError("hessian", "series ratio is not below one");
  return 2.0 / (alpha * (1.0 - ratio));
}

TridiagBoundResult tridiag_inverse_bound_check(const DenseVector& diag, const DenseVector& off, double alpha) {
  const Eigen::Index n = diag.size();
  if (off.size() != std::max<Eigen::Index>(n - 1, 0)) throw InputError("off-diagonal length must be n - 1");
  DenseMatrix a = DenseMatrix::Zero(n, n);
  a.diagonal() = diag;
  for (Eigen::Index i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = off[i];
  TridiagBoundResult r;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(a, Eigen::EigenvaluesOnly);
  const double smallest = es.eigenvalues().cwiseAbs().minCoeff();
  if (smallest == 0.0) return r;
  const double a2 = 1.0 / smallest;
  r.alpha = alpha > 0.0 ? alpha : a2;
  r.admissible = (off.size() == 0 || off.cwiseAbs().maxCoeff() <= 1.0) && a2 <= r.alpha * (1.0 + 1e-12);
  r.inverse_inf_norm = a.inverse().cwiseAbs().rowwise().sum().maxCoeff();
  r.bound = tridiag_inverse_radius(r.alpha);
  r.holds = r.inverse_inf_norm <= r.bound * (1.0 + 1e-12);
  return r;
}

namespace {

// Composite Gauss-Legendre over [-delta, delta]^n of exp(-beta x.Ax/2).
double box_integral(const DenseMatrix& a, double delta, double beta, int panels) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const int n = static_cast<int>(a.rows());
  std::vector<double> nodes, weights;
  const double hw = delta / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = -delta + (2 * p + 1) * hw;
    for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
      const double xa = Rule::abscissa()[i];
      const double wa = Rule::weights()[i];
      nodes.push_back(mid + hw * xa);
      weights.push_back(hw * wa);
      if (xa != 0.0) {
        nodes.push_back(mid - hw * xa);
        weights.push_back(hw * wa);
      }
    }
  }
  const int q = static_cast<int>(nodes.size());
  std::vector<int> idx(n, 0);
  DenseVector x(n);
  double total = 0.0;
  long count = 1;
  for (int i = 0; i < n; ++i) count *= q;
  for (long c = 0; c < count; ++c) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      x[i] = nodes[idx[i]];
      w *= weights[idx[i]];
    }
    total += w * std::exp(-0.5 * beta * x.dot(a * x));
    for (int i = 0; i < n; ++i) {
      if (++idx[i] < q) break;
      idx[i] = 0;
    }
  }
  return total;
}

}  // namespace

BoxGaussianResult box_gaussian_lower_bound_check(const BlockTridiagonal& b, double delta, double beta) {
  if (!(delta > 0.0) || !(beta > 0.0)) throw InputError("delta and beta must be positive");
  BoxGaussianResult r;
  const DenseMatrix a = b.to_dense();
  const int n = static_cast<int>(a.rows());
  r.feasible = n <= 4;
  if (!r.feasible) return r;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(a);
  if (es.eigenvalues().minCoeff() <= 0.0) throw InputError("box Gaussian check needs a positive definite matrix");
  const DenseMatrix inv_sqrt =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const double rho0 = 1.0 / inv_sqrt.cwiseAbs().rowwise().sum().maxCoeff();
  r.rho = 0.5 * rho0 * rho0 * delta * delta;
  const double sqrt_det = std::sqrt(es.eigenvalues().prod());
  r.rhs = std::pow(-std::expm1(-beta * r.rho), n) / sqrt_det;

  // panels sized to the narrowest Gaussian width, capped so the finer pass stays small
  const double width = 1.0 / std::sqrt(beta * es.eigenvalues().maxCoeff());
  int panels = std::max(2, static_cast<int>(std::ceil(delta / width)));
  const int cap = n <= 2 ? 64 : (n == 3 ? 12 : 4);
  panels = std::min(panels, cap);
  const double norm = std::pow(beta / kTwoPi, 0.5 * n);
  const double coarse = norm * box_integral(a, delta, beta, panels);
  const double fine = norm * box_integral(a, delta, beta, 2 * panels);
  r.lhs = fine;
  r.quadrature_change = std::abs(fine - coarse) / fine;
  r.inconclusive = r.quadrature_change > 1e-8;
  // 1 - lhs sqrt[A] below 1e-12 cannot be resolved: any rho passes to machine precision
  const double log_fraction = std::log(r.lhs) + std::log(sqrt_det);
  const double deficit = -std::expm1(log_fraction);
  r.rho_calibrated = deficit <= 1e-12 ? std::numeric_limits<double>::infinity()
                                      : -std::log(-std::expm1(log_fraction / n)) / beta;
  r.holds = !r.inconclusive && r.lhs >= r.rhs * (1.0 - 1e-10);
  return r;
}

}  // namespace mather
