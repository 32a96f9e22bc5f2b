#include "mather/lagrangian.hpp"

namespace mather {

DiscreteLagrangian::DiscreteLagrangian(TrigPotential potential, Vec omega)
    : potential_(std::move(potential)), omega_(std::move(omega)) {
  if (omega_.size() != potential_.dim()) throw InputError("omega dimension mismatch");
}

DiscreteLagrangian::DiscreteLagrangian(TrigPotential potential, double omega)
    : potential_(std::move(potential)), omega_(Vec::Constant(potential_.dim(), omega)) {}

double DiscreteLagrangian::value(const Vec& x, const Vec& y) const {
  const Vec dx = y - x;
  return 0.5 * dx.squaredNorm() - potential_.value(x) - omega_.dot(dx);
}

Vec DiscreteLagrangian::d1(const Vec& x, const Vec& y) const {
  return -(y - x) - potential_.gradient(x) + omega_;
}

Vec DiscreteLagrangian::d2(const Vec& x, const Vec& y) const { return (y - x) - omega_; }

Mat DiscreteLagrangian::d11(const Vec& x, const Vec&) const {
  return Mat::Identity(dim(), dim()) - potential_.hessian(x);
}

Mat DiscreteLagrangian::d22(const Vec&, const Vec&) const { return Mat::Identity(dim(), dim()); }

Mat DiscreteLagrangian::d12(const Vec&, const Vec&) const { return -Mat::Identity(dim(), dim()); }

std::unique_ptr<Lagrangian> DiscreteLagrangian::clone() const {
  return std::make_unique<DiscreteLagrangian>(*this);
}

NormalizedLagrangian::NormalizedLagrangian(const Lagrangian& base, GridFunction u, double c)
    : base_(base.clone()), u_(std::move(u)), c_(c) {
  if (u_.grid.dim() != base_->dim()) throw InputError("gauge function dimension mismatch");
}

NormalizedLagrangian::NormalizedLagrangian(const NormalizedLagrangian& other)
    : base_(other.base_->clone()), u_(other.u_), c_(other.c_) {}

double NormalizedLagrangian::value(const Vec& x, const Vec& y) const {
  return base_->value(x, y) - u_.interpolate(y) + u_.interpolate(x) + c_;
}

Vec NormalizedLagrangian::d1(const Vec& x, const Vec& y) const {
  return base_->d1(x, y) + u_.interpolate_gradient(x);
}

Vec NormalizedLagrangian::d2(const Vec& x, const Vec& y) const {
  return base_->d2(x, y) - u_.interpolate_gradient(y);
}

std::unique_ptr<Lagrangian> NormalizedLagrangian::clone() const {
  return std::make_unique<NormalizedLagrangian>(*this);
}

double lagrangian_value(const Lagrangian& lag, const Vec& x, const Vec& y) {
  return lag.value(x, y);
}

NormalizedLagrangian normalize_lagrangian(const Lagrangian& lag, const GridFunction& u, double c) {
  return NormalizedLagrangian(lag, u, c);
}

}  // namespace mather
