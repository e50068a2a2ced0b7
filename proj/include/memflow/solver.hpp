#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "memflow/assembly.hpp"
#include "memflow/problem.hpp"

namespace memflow {

enum class ToleranceMode {
  Absolute,  ///< stop when ||R|| <= tol
  Relative   ///< stop when ||R|| <= tol * ||R_0||
};

struct NewtonOptions {
  double tol = 1e-7;
  int max_iter = 25;
  ToleranceMode mode = ToleranceMode::Absolute;
  bool line_search = false;  ///< backtracking by halves, at most 8 cuts
  bool stokes_warm_start = false;
  double divergence_factor = 1e6;
};

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residual_history;  ///< ||R|| before each step and after the last
  bool converged = false;
  bool diverged = false;
  double max_linear_residual = 0.0;
  std::string message;
};

/// Linear solver failure inside Newton, tagged with the iteration index.
class NewtonError : public std::runtime_error {
 public:
  NewtonError(const std::string& what, int iteration) : std::runtime_error(what), iteration_(iteration) {}
  [[nodiscard]] int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// Reduced residual: entries at constrained dofs are zeroed.
Eigen::VectorXd residual(const SystemOperator& op, const SystemState& state);

/// Newton's method on the free dofs. The Jacobian is re-assembled every
/// iteration; the initial state must satisfy the essential constraints.
SystemState newton_solve(const SystemOperator& op, const SystemState& initial, const NewtonOptions& options,
                         NewtonReport* report);

/// Solves the linear part alone (no convection) from the constrained zero
/// state; used as a warm start.
SystemState stokes_solve(const SystemOperator& op);

}  // namespace memflow
