#pragma once

#include <memory>

#include "mather/grid.hpp"
#include "mather/potential.hpp"
#include "mather/types.hpp"

namespace mather {

/// Discrete-time Lagrangian L(x, y) on lifts, with first and second partials.
/// d12(x, y)(a, b) = d^2 L / dx_a dy_b.
class Lagrangian {
 public:
  virtual ~Lagrangian() = default;

  virtual int dim() const = 0;
  virtual double value(const Vec& x, const Vec& y) const = 0;
  virtual Vec d1(const Vec& x, const Vec& y) const = 0;
  virtual Vec d2(const Vec& x, const Vec& y) const = 0;
  virtual Mat d11(const Vec& x, const Vec& y) const = 0;
  virtual Mat d22(const Vec& x, const Vec& y) const = 0;
  virtual Mat d12(const Vec& x, const Vec& y) const = 0;

  virtual std::unique_ptr<Lagrangian> clone() const = 0;
};

/// L(x, y) = |y - x|^2 / 2 - V(x) - <omega, y - x>.
class DiscreteLagrangian final : public Lagrangian {
 public:
  DiscreteLagrangian(TrigPotential potential, Vec omega);
  DiscreteLagrangian(TrigPotential potential, double omega);

  const TrigPotential& potential() const { return potential_; }
  const Vec& omega() const { return omega_; }

  int dim() const override { return potential_.dim(); }
  double value(const Vec& x, const Vec& y) const override;
  Vec d1(const Vec& x, const Vec& y) const override;
  Vec d2(const Vec& x, const Vec& y) const override;
  Mat d11(const Vec& x, const Vec& y) const override;
  Mat d22(const Vec& x, const Vec& y) const override;
  Mat d12(const Vec& x, const Vec& y) const override;
  std::unique_ptr<Lagrangian> clone() const override;

 private:
  TrigPotential potential_;
  Vec omega_;
};

/// L(x, y) - u(y) + u(x) + c with u interpolated from grid nodes. Action along a
/// path changes by u(g_0) - u(g_n) + n c; second partials are those of L.
class NormalizedLagrangian final : public Lagrangian {
 public:
  NormalizedLagrangian(const Lagrangian& base, GridFunction u, double c);
  NormalizedLagrangian(const NormalizedLagrangian& other);
  NormalizedLagrangian& operator=(const NormalizedLagrangian&) = delete;

  int dim() const override { return base_->dim(); }
  double value(const Vec& x, const Vec& y) const override;
  Vec d1(const Vec& x, const Vec& y) const override;
  Vec d2(const Vec& x, const Vec& y) const override;
  Mat d11(const Vec& x, const Vec& y) const override { return base_->d11(x, y); }
  Mat d22(const Vec& x, const Vec& y) const override { return base_->d22(x, y); }
  Mat d12(const Vec& x, const Vec& y) const override { return base_->d12(x, y); }
  std::unique_ptr<Lagrangian> clone() const override;

 private:
  std::unique_ptr<Lagrangian> base_;
  GridFunction u_;
  double c_;
};

/// L*(x, y) = L(y, x), the time-reversed system.
class ReversedLagrangian final : public Lagrangian {
 public:
  explicit ReversedLagrangian(const Lagrangian& base) : base_(base.clone()) {}
  ReversedLagrangian(const ReversedLagrangian& other) : base_(other.base_->clone()) {}

  int dim() const override { return base_->dim(); }
  double value(const Vec& x, const Vec& y) const override { return base_->value(y, x); }
  Vec d1(const Vec& x, const Vec& y) const override { return base_->d2(y, x); }
  Vec d2(const Vec& x, const Vec& y) const override { return base_->d1(y, x); }
  Mat d11(const Vec& x, const Vec& y) const override { return base_->d22(y, x); }
  Mat d22(const Vec& x, const Vec& y) const override { return base_->d11(y, x); }
  Mat d12(const Vec& x, const Vec& y) const override { return base_->d12(y, x).transpose(); }
  std::unique_ptr<Lagrangian> clone() const override {
    return std::make_unique<ReversedLagrangian>(*this);
  }

 private:
  std::unique_ptr<Lagrangian> base_;
};

double lagrangian_value(const Lagrangian& lag, const Vec& x, const Vec& y);

NormalizedLagrangian normalize_lagrangian(const Lagrangian& lag, const GridFunction& u, double c);

}  // namespace mather
