#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "memflow/mesh.hpp"
#include "memflow/norms.hpp"
#include "memflow/problem.hpp"
#include "memflow/solver.hpp"

namespace memflow {

/// Smooth exact solution on the unit square with its forcing terms:
/// u = (cos(pi x) sin(pi y), -cos(pi y) sin(pi x)), p = sin(x^2 + y^2),
/// theta = exp(-x y). Tags: inlet x=0, outlet x=1, membrane on
/// `membrane_side` (bottom or top), wall on the opposite side.
struct ManufacturedCase {
  PhysicalParams physics;
  Side membrane_side = Side::Bottom;
  ExactSolution exact;
  VectorFn f_u;
  ScalarFn f_theta;
  /// Outward unit normal of the membrane side.
  Vector2 membrane_normal;
};

ManufacturedCase manufactured_case(const PhysicalParams& physics = {}, Side membrane_side = Side::Bottom);

/// Strong momentum and transport operators applied to the exact fields, by
/// central differences with step `h` (independent check of the forcing).
Vector2 momentum_residual_fd(const ManufacturedCase& mc, const Point2& x, double h = 1e-4);
double transport_residual_fd(const ManufacturedCase& mc, const Point2& x, double h = 1e-4);

/// n x n unit square mesh with the case's tag layout.
std::shared_ptr<const Mesh> manufactured_mesh(const ManufacturedCase& mc, int n, Diagonal diagonal = Diagonal::Right);

ProblemDefinition manufactured_problem(const ManufacturedCase& mc, std::shared_ptr<const Mesh> mesh,
                                       const DiscretizationParams& disc);

/// Experimental order log(e_i / e_ip1) / log(h_i / h_ip1); empty when any
/// input is non-positive or the mesh sizes coincide.
std::optional<double> compute_rate(double e_i, double e_ip1, double h_i, double h_ip1);

struct ConvergenceRow {
  int dof = 0;
  double h = 0.0;
  ErrorRecord errors;
  int iterations = 0;
  bool converged = false;
  double final_residual = 0.0;
  double div_norm = 0.0;      ///< ||div u_h||
  double broken_norm = 0.0;   ///< ||u_h||_{1,h}
  double seconds = 0.0;
  std::string failure;        ///< non-empty when the level failed
};

enum class ErrorField { U, P, Lambda, Theta, LambdaMesh };

struct ConvergenceReport {
  std::string label;
  std::vector<ConvergenceRow> rows;

  [[nodiscard]] static double value(const ConvergenceRow& r, ErrorField f);
  /// Rate between rows i-1 and i; empty for i = 0.
  [[nodiscard]] std::optional<double> rate(std::size_t i, ErrorField f) const;
};

struct StudyOptions {
  std::vector<int> levels = {10, 20, 30, 40};  ///< cells per side
  Diagonal diagonal = Diagonal::Right;
  DiscretizationParams disc;
  NewtonOptions newton;
  int jobs = 1;
};

/// Solves the manufactured problem on every level (levels are independent
/// and may run on up to `jobs` threads) and records errors and iterations.
ConvergenceReport convergence_study(const ManufacturedCase& mc, const StudyOptions& options);

/// A named manufactured study of the standard suite.
struct NamedStudy {
  std::string name;         ///< file stem, e.g. "bdm_k0"
  std::string description;  ///< one line for listings
  StudyOptions options;
};

/// Every study the `convergence` command runs by default: BDM k=0 and k=1,
/// Crouzeix-Raviart, and the conforming scheme with P1 and P0 multipliers
/// without stabilization and with alpha0=0.1 for delta in {-1,0,1}.
std::vector<NamedStudy> standard_studies();

/// Levels used by the conforming-scheme studies (cells per side).
std::vector<int> conforming_levels();

/// One level of a study.
ConvergenceRow solve_level(const ManufacturedCase& mc, int n, const StudyOptions& options,
                           SystemState* state_out = nullptr, std::shared_ptr<Discretization>* disc_out = nullptr);

}  // namespace memflow
