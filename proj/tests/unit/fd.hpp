#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Core>

namespace pdds::testing {

/// Central difference of f along direction v at x.
inline double directional_fd(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& v, double h = 1e-5) {
  return (f(x + h * v) - f(x - h * v)) / (2.0 * h);
}

/// |a - b| relative to the larger magnitude, with an absolute floor so that
/// derivatives that vanish compare on an absolute scale.
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace pdds::testing
