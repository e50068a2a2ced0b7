#pragma once

#include <functional>
#include <stdexcept>

#include <Eigen/Core>

#include "memflow/mesh.hpp"

namespace memflow {

using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;
using ScalarFn = std::function<double(const Point2&)>;
using VectorFn = std::function<Vector2(const Point2&)>;
using TensorFn = std::function<Matrix2(const Point2&)>;

/// Inconsistent or unsupported problem setup.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A user-supplied field could not be evaluated (NaN/inf or exception).
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace memflow
