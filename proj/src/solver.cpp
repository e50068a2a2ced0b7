#include "memflow/solver.hpp"

#include <cmath>

#include "memflow/linalg.hpp"

namespace memflow {

namespace {

struct FreeSet {
  std::vector<int> free;
  std::vector<char> constrained;
};

FreeSet free_dofs(const Discretization& disc) {
  FreeSet s;
  s.constrained.assign(disc.layout.total_dim, 0);
  for (const auto& [dof, v] : monolithic_constraints(disc)) s.constrained[dof] = 1;
  for (int i = 0; i < disc.layout.total_dim; ++i)
    if (!s.constrained[i]) s.free.push_back(i);
  return s;
}

Eigen::VectorXd restrict_to(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

}  // namespace

Eigen::VectorXd residual(const SystemOperator& op, const SystemState& state) {
  const Discretization& disc = op.discretization();
  check_constraints(disc, state);
  Eigen::VectorXd r = op.residual(state.x);
  for (const auto& [dof, v] : monolithic_constraints(disc)) r[dof] = 0.0;
  return r;
}

SystemState stokes_solve(const SystemOperator& op) {
  const Discretization& disc = op.discretization();
  const FreeSet fs = free_dofs(disc);
  SystemState s = initial_state(disc);
  // Linear part plus the transport operator frozen at zero velocity.
  const Eigen::VectorXd r = op.linear_part() * s.x - op.load();
  const SparseMatrix a = extract_submatrix(op.linear_part(), fs.free, fs.free);
  const Eigen::VectorXd dx = lu_solve(a, -restrict_to(r, fs.free));
  for (std::size_t i = 0; i < fs.free.size(); ++i) s.x[fs.free[i]] += dx[i];
  return s;
}

SystemState newton_solve(const SystemOperator& op, const SystemState& initial, const NewtonOptions& opt,
                         NewtonReport* report) {
  const Discretization& disc = op.discretization();
  NewtonReport local;
  NewtonReport& rep = report ? *report : local;
  rep = NewtonReport{};
  const FreeSet fs = free_dofs(disc);
  SystemState s = opt.stokes_warm_start ? stokes_solve(op) : initial;
  check_constraints(disc, s);

  Eigen::VectorXd r;
  SparseMatrix j;
  op.evaluate(s.x, &r, &j);
  Eigen::VectorXd rf = restrict_to(r, fs.free);
  double norm = rf.norm();
  const double norm0 = norm;
  rep.residual_history.push_back(norm);
  const double target = opt.mode == ToleranceMode::Absolute ? opt.tol : opt.tol * norm0;

  while (true) {
    if (!std::isfinite(norm)) {
      rep.diverged = true;
      rep.message = "residual is not finite";
      break;
    }
    if (norm <= target) {
      rep.converged = true;
      rep.message = "converged";
      break;
    }
    if (rep.iterations >= opt.max_iter) {
      rep.message = "maximum number of iterations reached";
      break;
    }
    if (norm > opt.divergence_factor * std::max(norm0, 1e-300)) {
      rep.diverged = true;
      rep.message = "residual grew by more than the divergence factor";
      break;
    }
    const SparseMatrix jff = extract_submatrix(j, fs.free, fs.free);
    LinearSolveReport lrep;
    Eigen::VectorXd dx;
    try {
      dx = lu_solve(jff, -rf, &lrep);
    } catch (const SolverError& e) {
      throw NewtonError(std::string(e.what()) + " (Newton iteration " + std::to_string(rep.iterations + 1) + ")",
                        rep.iterations + 1);
    }
    rep.max_linear_residual = std::max(rep.max_linear_residual, lrep.relative_residual);

    double step = 1.0;
    SystemState trial = s;
    for (int cut = 0;; ++cut) {
      trial.x = s.x;
      for (std::size_t i = 0; i < fs.free.size(); ++i) trial.x[fs.free[i]] += step * dx[i];
      op.evaluate(trial.x, &r, &j);
      rf = restrict_to(r, fs.free);
      if (!opt.line_search || cut >= 8 || rf.norm() < (1.0 - 1e-4 * step) * norm) break;
      step *= 0.5;
    }
    s = trial;
    norm = rf.norm();
    ++rep.iterations;
    rep.residual_history.push_back(norm);
  }
  return s;
}

}  // namespace memflow
