#include <doctest.h>

#include <cmath>

#include "memflow/verification.hpp"

using namespace memflow;

TEST_CASE("rates follow log ratios and reject degenerate input") {
  CHECK(*compute_rate(1.0, 0.5, 0.2, 0.1) == doctest::Approx(1.0));
  CHECK(*compute_rate(1.0, 0.25, 0.2, 0.1) == doctest::Approx(2.0));
  CHECK_FALSE(compute_rate(0.0, 0.5, 0.2, 0.1));
  CHECK_FALSE(compute_rate(1.0, 0.5, 0.1, 0.1));
  CHECK_FALSE(compute_rate(1.0, -0.5, 0.2, 0.1));
}

TEST_CASE("manufactured forcing matches finite differences of the exact fields") {
  const PhysicalParams pp{0.7, 1.3, 0.4};
  for (Side side : {Side::Bottom, Side::Top}) {
    const auto mc = manufactured_case(pp, side);
    for (const Point2& x : {Point2(0.3, 0.4), Point2(0.71, 0.18), Point2(0.5, 0.9)}) {
      CHECK((momentum_residual_fd(mc, x) - mc.f_u(x)).norm() < 1e-5);
      CHECK(std::abs(transport_residual_fd(mc, x) - mc.f_theta(x)) < 1e-5);
    }
  }
}

TEST_CASE("exact fields: divergence free velocity, theta in [1/e, 1]") {
  const auto mc = manufactured_case();
  for (double x = 0.05; x < 1.0; x += 0.3)
    for (double y = 0.05; y < 1.0; y += 0.3) {
      const Point2 p(x, y);
      CHECK(mc.exact.grad_u(p).trace() == doctest::Approx(0.0).epsilon(1e-14));
      CHECK(mc.exact.theta(p) <= 1.0);
      CHECK(mc.exact.theta(p) >= std::exp(-1.0));
    }
  CHECK(mc.membrane_normal.isApprox(Vector2(0, -1)));
  CHECK(manufactured_case({}, Side::Top).membrane_normal.isApprox(Vector2(0, 1)));
}

TEST_CASE("a short k=0 study converges at first order") {
  StudyOptions opt;
  opt.levels = {4, 8, 16};
  const ConvergenceReport r = convergence_study(manufactured_case(), opt);
  REQUIRE(r.rows.size() == 3);
  CHECK_FALSE(r.rate(0, ErrorField::U));
  for (auto f : {ErrorField::U, ErrorField::Theta}) CHECK(*r.rate(2, f) > 0.85);
  for (const auto& row : r.rows) {
    CHECK(row.converged);
    CHECK(row.div_norm <= 1e-10 * std::max(1.0, row.broken_norm));
  }
  CHECK(r.rows[0].h > r.rows[2].h);
}

TEST_CASE("levels may run concurrently with identical results") {
  StudyOptions opt;
  opt.levels = {3, 5, 4};
  const ConvergenceReport a = convergence_study(manufactured_case(), opt);
  opt.jobs = 3;
  const ConvergenceReport b = convergence_study(manufactured_case(), opt);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].errors.e_u == b.rows[i].errors.e_u);
  // Rows are sorted from coarse to fine whatever the input order.
  CHECK(a.rows[1].dof < a.rows[2].dof);
  opt.levels = {4};
  CHECK_THROWS_AS(convergence_study(manufactured_case(), opt), ConfigurationError);
}

TEST_CASE("standard suite names every study once") {
  const auto s = standard_studies();
  CHECK(s.size() == 8);
  CHECK(s[0].options.levels.front() == 10);  // h = sqrt(2)/10 ~ 0.141
  for (const auto& st : s)
    if (st.options.disc.scheme == Scheme::ConformingStabilized) CHECK(st.options.levels == conforming_levels());
}
