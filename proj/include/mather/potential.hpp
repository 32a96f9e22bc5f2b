#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mather/types.hpp"

namespace mather {

/// One Fourier mode a*cos(2 pi k.x) + b*sin(2 pi k.x).
struct FourierMode {
  std::array<int, 2> k{0, 0};
  double a = 0.0;
  double b = 0.0;
};

/// Z^d-periodic trigonometric polynomial with exact derivatives to order 3.
class TrigPotential {
 public:
  TrigPotential() = default;
  TrigPotential(int d, std::vector<FourierMode> modes);

  static TrigPotential zero(int d) { return TrigPotential(d, {}); }

  int dim() const { return d_; }
  const std::vector<FourierMode>& modes() const { return modes_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  /// Third derivative tensor, flattened as t[(i*d + j)*d + l].
  std::vector<double> third(const Vec& x) const;

  /// Same potential multiplied by `factor` (used by the N-step discretization).
  TrigPotential scaled(double factor) const;
  /// Potential with the sign flipped.
  TrigPotential negated() const { return scaled(-1.0); }

  /// Max |V'| bound from the coefficients: sum 2 pi |k| sqrt(a^2+b^2).
  double gradient_bound() const;

  nlohmann::json to_json() const;
  static TrigPotential from_json(const nlohmann::json& j);
  static TrigPotential load(const std::string& path);

 private:
  double phase(const FourierMode& m, const Vec& x) const;

  int d_ = 1;
  std::vector<FourierMode> modes_;
};

/// a*cos(2 pi x) + b*cos(4 pi x) in one dimension.
TrigPotential cosine_potential(double a, double b = 0.0);

/// Equal-height maxima at x = 0 (V'' = -1) and x = 1/2 (V'' = -4).
/// Negate it for the equal-depth double well used by the Schrodinger side.
TrigPotential two_maxima_potential();

}  // namespace mather
