#include <doctest.h>

#include "memflow/solver.hpp"
#include "memflow/verification.hpp"

using namespace memflow;

namespace {

Discretization small_problem(const DiscretizationParams& dp, int n = 4) {
  const auto mc = manufactured_case();
  return discretize(manufactured_problem(mc, manufactured_mesh(mc, n), dp));
}

}  // namespace

TEST_CASE("Newton converges quadratically on the manufactured problem") {
  const Discretization disc = small_problem({});
  const SystemOperator op(disc);
  NewtonOptions opt;
  NewtonReport rep;
  const SystemState s = newton_solve(op, initial_state(disc), opt, &rep);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 10);
  CHECK(rep.residual_history.back() <= opt.tol);
  REQUIRE(rep.residual_history.size() >= 3);
  const auto& h = rep.residual_history;
  // Quadratic decrease in the last steps.
  CHECK(h[h.size() - 2] < 1e-2 * h[h.size() - 3]);
  check_constraints(disc, s);
}

TEST_CASE("constrained dofs keep their values and residual entries vanish there") {
  const Discretization disc = small_problem({});
  const SystemOperator op(disc);
  const SystemState s0 = initial_state(disc);
  CHECK_NOTHROW(check_constraints(disc, s0));
  const Eigen::VectorXd r = residual(op, s0);
  for (const auto& [dof, val] : monolithic_constraints(disc)) CHECK(r[dof] == 0.0);
  SystemState broken = s0;
  broken.x[monolithic_constraints(disc).begin()->first] += 1.0;
  CHECK_THROWS_AS(check_constraints(disc, broken), std::logic_error);
}

TEST_CASE("relative tolerance and iteration cap are honoured") {
  const Discretization disc = small_problem({});
  const SystemOperator op(disc);
  NewtonOptions opt;
  opt.max_iter = 1;
  NewtonReport rep;
  newton_solve(op, initial_state(disc), opt, &rep);
  CHECK_FALSE(rep.converged);
  CHECK(rep.iterations == 1);
  opt.max_iter = 20;
  opt.mode = ToleranceMode::Relative;
  opt.tol = 1e-3;
  NewtonReport rel;
  newton_solve(op, initial_state(disc), opt, &rel);
  CHECK(rel.converged);
  CHECK(rel.residual_history.back() <= 1e-3 * rel.residual_history.front());
}

TEST_CASE("every scheme solves the small manufactured problem") {
  for (const auto& dp : {DiscretizationParams{1, 30.0, 0, Scheme::DivConformingDG, -1},
                         DiscretizationParams{0, 20.0, 0, Scheme::CrouzeixRaviart, -1},
                         DiscretizationParams{1, 0.1, -1, Scheme::ConformingStabilized, 1},
                         DiscretizationParams{1, 0.0, 0, Scheme::ConformingStabilized, 0}}) {
    const Discretization disc = small_problem(dp, 3);
    NewtonReport rep;
    newton_solve(SystemOperator(disc), initial_state(disc), {}, &rep);
    CHECK(rep.converged);
  }
}

TEST_CASE("line search and warm start do not change the converged state") {
  const Discretization disc = small_problem({});
  const SystemOperator op(disc);
  NewtonOptions a, b;
  b.line_search = true;
  b.stokes_warm_start = true;
  NewtonReport ra, rb;
  const SystemState sa = newton_solve(op, initial_state(disc), a, &ra);
  const SystemState sb = newton_solve(op, initial_state(disc), b, &rb);
  CHECK(rb.converged);
  CHECK((sa.x - sb.x).norm() < 1e-6 * sa.x.norm());
}
