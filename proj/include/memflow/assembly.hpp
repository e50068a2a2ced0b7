#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

#include "memflow/linalg.hpp"
#include "memflow/problem.hpp"
#include "memflow/spaces.hpp"

namespace memflow {

/// Volume and facet quadrature exactness 2(r+1)+1 for spaces of maximal
/// polynomial degree r.
int default_quadrature_degree(int max_space_degree);
int default_quadrature_degree(const Discretization& disc);

/// Parameters of the viscous form. With `interior_penalty` the form is the
/// symmetric interior penalty operator over interior facets plus Nitsche
/// terms on boundary tags with a mode other than None; without it only the
/// volume term mu (grad u, grad v) is assembled.
struct ViscousForm {
  double mu = 1.0;
  double alpha0 = 20.0;
  bool interior_penalty = true;
  std::map<BoundaryTag, NitscheMode> modes;
  int quadrature = 5;
};

/// Projector onto the constrained component of a Nitsche mode.
Matrix2 nitsche_projector(NitscheMode mode, const Vector2& normal);

SparseMatrix assemble_a_h(const Space& velocity, const ViscousForm& form);
/// Boundary data functional: the Nitsche consistency and penalty terms with
/// the data g in place of the trial function.
Eigen::VectorXd assemble_a_h_rhs(const Space& velocity, const ViscousForm& form, const VectorFn& g);

/// A form linear in its trial argument together with its derivative with
/// respect to the advecting velocity w (columns index velocity dofs).
struct ConvectionBlocks {
  SparseMatrix op;
  SparseMatrix dw;
};

/// Upwind convection: rho (w.grad u, v) plus, on interior facets of
/// discontinuous spaces, rho sum_K int_{dK} min(w.n_K, 0) (u_ext - u_int).v_int
/// with w.n the facet average. `dw` is the derivative of the form at u in
/// direction of w; the switch uses weight 1/2 where w.n vanishes.
ConvectionBlocks assemble_upwind_convection(const Space& velocity, const Eigen::VectorXd& w,
                                            const Eigen::VectorXd& u, double rho, int quadrature);

/// b1(v, q) = -(q, div v) as a (dim Q x dim V) matrix and
/// b2(v, xi) = sum_e int_e (v.n) xi as a (dim W x dim V) matrix.
struct CouplingBlocks {
  SparseMatrix b1;
  SparseMatrix b2;
};
CouplingBlocks assemble_b(const Space& velocity, const Space& pressure, const MultiplierSpace& multiplier,
                          int quadrature);

/// D (grad theta, grad tau).
SparseMatrix assemble_c(const Space& concentration, double D, int quadrature);

/// -(theta, w.grad tau) + (theta w.n, tau) on the outlet. `op` acts on theta,
/// `dw` is the derivative at theta in the direction of w.
ConvectionBlocks assemble_c_tilde(const Space& concentration, const Space& velocity, const Eigen::VectorXd& w,
                                  const Eigen::VectorXd& theta, int quadrature);

/// rhs_xi = sum_e int_e xi g(theta) and its derivative in theta.
struct MembraneCoupling {
  Eigen::VectorXd rhs;
  SparseMatrix jacobian;
};
MembraneCoupling assemble_membrane_coupling(const MultiplierSpace& multiplier, const Space& concentration,
                                            const MembraneLaw& law, const Eigen::VectorXd& theta,
                                            int quadrature);

Eigen::VectorXd assemble_source(const Space& space, const VectorFn& f, int quadrature);
Eigen::VectorXd assemble_source(const Space& space, const ScalarFn& f, int quadrature);

/// int_{tags} t(x, n).v ds.
Eigen::VectorXd assemble_boundary_traction(const Space& velocity, const std::vector<BoundaryTag>& tags,
                                           const TractionFn& t, int quadrature);
/// int_{tags} q(x, n) tau ds.
Eigen::VectorXd assemble_boundary_flux(const Space& space, const std::vector<BoundaryTag>& tags,
                                       const FluxFn& q, int quadrature);

/// Multiplier stabilization of the conforming scheme as a monolithic
/// (total x total) matrix: rows carry the test functionals
/// delta mu (grad v n).n, -delta q and xi, columns the residual
/// xi + mu (grad u n).n - p, all weighted by -alpha0 h_e on membrane facets.
/// Gradients and pressures are taken from the cell adjacent to each facet.
SparseMatrix assemble_multiplier_stabilization(const Discretization& disc, int quadrature);

/// The coupled residual R(x) and its Jacobian. Linear parts are assembled
/// once at construction; convection terms are re-assembled per call.
class SystemOperator {
 public:
  explicit SystemOperator(const Discretization& disc);

  [[nodiscard]] const Discretization& discretization() const { return *disc_; }
  [[nodiscard]] int quadrature() const { return quad_; }

  [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& x) const;
  [[nodiscard]] SparseMatrix jacobian(const Eigen::VectorXd& x) const;
  /// Both at once, sharing the convection assembly.
  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* residual, SparseMatrix* jacobian) const;

  /// Linear part only (Stokes plus diffusion, no convection).
  [[nodiscard]] const SparseMatrix& linear_part() const { return linear_; }
  [[nodiscard]] const Eigen::VectorXd& load() const { return load_; }

 private:
  const Discretization* disc_;
  int quad_;
  SparseMatrix linear_;
  Eigen::VectorXd load_;
};

}  // namespace memflow
