#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "memflow/problem.hpp"
#include "memflow/spaces.hpp"

namespace memflow {

/// Outcome of one executable property. `value` is the measured quantity,
/// compared against `threshold` in the sense stated by `relation`.
struct PropertyResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  ///< ">=", "<=" or ">"
  bool pass = false;
};

struct PropertyOptions {
  int samples = 100;
  std::uint64_t seed = 20240611;
  int mesh_cells = 3;  ///< per side for the positivity and coercivity meshes
};

/// Basis (columns) of the discretely divergence-free velocities of a BDM
/// space whose normal components vanish on the whole boundary.
Eigen::MatrixXd divergence_free_basis(const Space& velocity, const Space& pressure, int quadrature);

/// min over random u and divergence-free w (zero normal trace) of
/// a~_h(w; u, u), together with the largest deviation from the jump form
/// (rho/2) sum_e int |w.n| |[[u]]|^2 relative to its size.
struct UpwindCheck {
  double min_energy = 0.0;
  double max_identity_defect = 0.0;
};
UpwindCheck check_upwind_positivity(int k, const PropertyOptions& opt);

/// min over random tau of c~(w; tau, tau) for divergence-free w with
/// inflow on the inlet, outflow on the outlet and zero normal trace on the
/// membrane and wall.
double check_transport_positivity(int k, const PropertyOptions& opt);

/// Largest relative deviation between c~(w; tau, tau) and
/// 1/2 (w.n, tau^2)_out - 1/2 (w.n, tau^2) on the rest of the boundary,
/// for divergence-free w with non-zero normal trace and random tau.
double check_transport_identity(int k, const PropertyOptions& opt);

/// Smallest generalized eigenvalue of the viscous form against the broken
/// H1 Gram matrix over the free velocity dofs.
double coercivity_constant(Scheme scheme, int k, double alpha0, int cells);

/// Largest relative mismatch between analytic Jacobian blocks and central
/// differences of the residual, over all (row block, column block) pairs,
/// for a random state on a 2x2 mesh with a concentration-dependent law.
double jacobian_fd_defect(const DiscretizationParams& disc, std::uint64_t seed);

/// Every property above for BDM k=0,1 (and the other schemes where they
/// apply), with the thresholds of the acceptance suite.
std::vector<PropertyResult> property_suite(const PropertyOptions& opt = {});

}  // namespace memflow
