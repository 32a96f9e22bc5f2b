#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mather {

// Small fixed-capacity vectors/matrices: d <= 2 for points, 2d <= 4 for
// phase-space maps. No heap allocation in hot loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;
using PhaseMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.141592653589793238462643383279;

/// Raised when an iterative method fails to meet its tolerance.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Raised on malformed input (potential files, configs, arguments).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Vec zeros(int d) { return Vec::Zero(d); }

}  // namespace mather
