#include "memflow/quadrature.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace memflow {

void gauss_jacobi(int n, double alpha, double beta, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  // Golub-Welsch on the symmetric Jacobi matrix of the recurrence.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  const double ab = alpha + beta;
  for (int k = 0; k < n; ++k) {
    const double d = 2.0 * k + ab;
    J(k, k) = (k == 0) ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / (d * (d + 2.0));
    if (k + 1 < n) {
      const double m = k + 1.0;
      const double dm = 2.0 * m + ab;
      const double num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
      const double den = dm * dm * (dm + 1.0) * (dm - 1.0);
      J(k, k + 1) = J(k + 1, k) = std::sqrt(num / den);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) * std::tgamma(beta + 1.0) /
                     std::tgamma(ab + 2.0);
  nodes = es.eigenvalues();
  weights = mu0 * es.eigenvectors().row(0).transpose().array().square();
}

QuadratureRule quadrature_rule(RefDomain domain, int exactness_degree) {
  if (exactness_degree < 0) throw std::invalid_argument("quadrature degree must be >= 0");
  if (exactness_degree > kMaxQuadratureDegree)
    throw CapabilityError("quadrature degree " + std::to_string(exactness_degree) +
                          " exceeds the implemented maximum " + std::to_string(kMaxQuadratureDegree));
  const int n = exactness_degree / 2 + 1;

  Eigen::VectorXd gl_t, gl_w;
  gauss_jacobi(n, 0.0, 0.0, gl_t, gl_w);

  QuadratureRule rule;
  rule.domain = domain;
  rule.degree = exactness_degree;
  if (domain == RefDomain::Interval) {
    rule.points = (0.5 * (gl_t.array() + 1.0)).matrix();
    rule.weights = 0.5 * gl_w;
    return rule;
  }

  Eigen::VectorXd gj_t, gj_w;
  gauss_jacobi(n, 1.0, 0.0, gj_t, gj_w);
  rule.points.resize(n * n, 2);
  rule.weights.resize(n * n);
  int q = 0;
  for (int j = 0; j < n; ++j) {
    const double eta = 0.5 * (gj_t[j] + 1.0);
    const double weta = 0.25 * gj_w[j];
    for (int i = 0; i < n; ++i) {
      const double xi = 0.5 * (gl_t[i] + 1.0);
      rule.points(q, 0) = xi * (1.0 - eta);
      rule.points(q, 1) = eta;
      rule.weights[q] = 0.5 * gl_w[i] * weta;
      ++q;
    }
  }
  return rule;
}

}  // namespace memflow
