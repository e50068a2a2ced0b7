#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace memflow {

class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RefDomain { Interval, Triangle };

/// Points are rows of `points` (1 column on the unit interval, 2 on the
/// reference triangle with vertices (0,0), (1,0), (0,1)).
struct QuadratureRule {
  RefDomain domain = RefDomain::Triangle;
  int degree = 0;
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  [[nodiscard]] int size() const { return static_cast<int>(weights.size()); }
};

inline constexpr int kMaxQuadratureDegree = 60;

/// Rule exact for polynomials up to `exactness_degree`. Interval rules are
/// Gauss-Legendre on [0,1]; triangle rules are collapsed Gauss-Legendre x
/// Gauss-Jacobi(1,0) products, all weights positive.
QuadratureRule quadrature_rule(RefDomain domain, int exactness_degree);

/// n-point Gauss-Jacobi nodes/weights on [-1,1] for weight (1-t)^alpha (1+t)^beta.
void gauss_jacobi(int n, double alpha, double beta, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

}  // namespace memflow
