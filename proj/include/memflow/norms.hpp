#pragma once

#include <functional>
#include <map>
#include <vector>

#include <Eigen/Core>

#include "memflow/problem.hpp"
#include "memflow/spaces.hpp"

namespace memflow {

/// Closed-form fields used to measure discretization errors.
struct ExactSolution {
  VectorFn u;
  TensorFn grad_u;  ///< (i,j) = d u_i / d x_j
  ScalarFn p;
  ScalarFn lambda;  ///< multiplier on the membrane
  ScalarFn theta;
  VectorFn grad_theta;
};

struct ErrorRecord {
  double e_u = 0.0;              ///< broken H1
  double e_p = 0.0;              ///< L2
  double e_lambda = 0.0;         ///< spectral H^{-1/2} on the membrane
  double e_lambda_mesh = 0.0;    ///< (sum h_e ||.||_e^2)^{1/2}
  double e_theta = 0.0;          ///< H1
};

/// L2 norm of a discrete field (any value size).
double l2_norm(const Space& space, const Eigen::VectorXd& coeffs, int quadrature);

/// Broken H1 norm: L2 plus cell-wise gradients plus h_e^{-1} ||[[v]]||^2 over
/// interior facets and the boundary facets whose Nitsche mode is not None
/// (boundary jumps use the mode's projector).
double broken_h1_norm(const Space& space, const Eigen::VectorXd& coeffs,
                      const std::map<BoundaryTag, NitscheMode>& boundary, int quadrature);

/// Same norm applied to u_h - u with a smooth exact u.
double broken_h1_error(const Space& space, const Eigen::VectorXd& coeffs, const VectorFn& u,
                       const TensorFn& grad_u, const std::map<BoundaryTag, NitscheMode>& boundary, int quadrature);

/// L2 error of a scalar field.
double l2_error(const Space& space, const Eigen::VectorXd& coeffs, const ScalarFn& exact, int quadrature);
/// Full H1 error of a scalar field.
double h1_error(const Space& space, const Eigen::VectorXd& coeffs, const ScalarFn& exact,
                const VectorFn& grad_exact, int quadrature);

/// ||div u_h||_{L2} of a vector field.
double divergence_l2_norm(const Space& velocity, const Eigen::VectorXd& coeffs, int quadrature);

/// (sum_e h_e ||xi||_{0,e}^2)^{1/2} over the membrane facets.
double mesh_half_norm(const MultiplierSpace& multiplier, const Eigen::VectorXd& coeffs, int quadrature);
/// Same norm of xi_h - xi.
double mesh_half_error(const MultiplierSpace& multiplier, const Eigen::VectorXd& coeffs, const ScalarFn& exact,
                       int quadrature);

/// Membrane function evaluated facet by facet: (facet, parameter t, point).
using MembraneFn = std::function<double(int, double, const Point2&)>;

/// Fractional Sobolev norms on the membrane via the spectral decomposition of
/// the 1D operator (u,v)_1 relative to (u,v)_0.
///
/// A continuous P1 space on the membrane facets, each split into `refine`
/// pieces, carries the mass matrix M and the H1 matrix K + M. With the
/// generalized eigenpairs (K + M) r_i = l_i M r_i, M-orthonormal, the norm is
/// ||f||_s^2 = sum_i (r_i^T b)^2 l_i^s with b_j = (f, phi_j). For s = 0 this
/// is the L2 norm of the projection of f onto the P1 space.
class SpectralMembraneNorm {
 public:
  explicit SpectralMembraneNorm(const Mesh& mesh, int refine = 4, int quadrature = 9);

  [[nodiscard]] double norm(const MembraneFn& f, double s) const;
  [[nodiscard]] int dim() const { return static_cast<int>(eigenvalues_.size()); }
  [[nodiscard]] const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  [[nodiscard]] const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  [[nodiscard]] const Eigen::MatrixXd& mass() const { return mass_; }
  /// Load vector b_j = (f, phi_j).
  [[nodiscard]] Eigen::VectorXd load(const MembraneFn& f) const;

 private:
  struct Piece {
    int facet;
    double t0, t1;
    int a, b;  // P1 dof at t0 and t1
    Point2 x0, x1;
  };
  std::vector<Piece> pieces_;
  int quadrature_;
  Eigen::MatrixXd mass_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

/// Convenience wrapper for a plain function of position.
double spectral_fractional_norm(const Mesh& mesh, const ScalarFn& f, double s, int refine = 4);

/// Multiplier field (optionally minus an exact function) as a MembraneFn.
MembraneFn multiplier_function(const MultiplierSpace& multiplier, const Eigen::VectorXd& coeffs,
                               const ScalarFn& subtract = {});

/// Errors of every field in its natural norm.
ErrorRecord field_errors(const Discretization& disc, const SystemState& state, const ExactSolution& exact,
                         int quadrature = -1);

/// int_{tag} u_h.n ds.
double normal_flux_integral(const Space& velocity, const Eigen::VectorXd& coeffs, BoundaryTag tag, int quadrature);

}  // namespace memflow
