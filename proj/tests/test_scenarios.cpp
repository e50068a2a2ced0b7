#include <doctest.h>

#include <algorithm>

#include "memflow/scenarios.hpp"

using namespace memflow;

TEST_CASE("permeate velocity at the inlet concentration") {
  const ChannelConfig cfg;
  CHECK(cfg.osmosis.permeate_velocity(600.0) == doctest::Approx(1.284e-5).epsilon(1e-3));
}

TEST_CASE("inlet profiles") {
  ChannelConfig cfg;
  CHECK(parabolic_inlet(cfg, 0.0) == doctest::Approx(0.0));
  CHECK(parabolic_inlet(cfg, cfg.d) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(parabolic_inlet(cfg, 0.5 * cfg.d) == doctest::Approx(6.0 * cfg.u0));
  // Berman profile on the centre line at x=0: u0 (3/2) (1 - Re/210).
  const double re = berman_reynolds(cfg);
  CHECK(re == doctest::Approx(cfg.osmosis.permeate_velocity(600) * 0.5e-3 * 1027.2 / 8.9e-4));
  CHECK(berman_inlet(cfg, 0.0, 0.5 * cfg.d) == doctest::Approx(cfg.u0 * 1.5 * (1.0 - re / 210.0)));
  CHECK(berman_inlet(cfg, 0.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("channel configuration errors") {
  ChannelConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.theta_in = 1000.0;  // kappa theta > dP: no filtration
  CHECK_THROWS_AS(cfg.validate(), ConfigurationError);
  CHECK_THROWS_AS(channel_problem(cfg), ConfigurationError);
  cfg = ChannelConfig{};
  cfg.L = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigurationError);
  cfg = ChannelConfig{};
  cfg.variant = ChannelVariant::Spacer;
  CHECK_THROWS_AS(cfg.validate(), ConfigurationError);  // no geometry
  cfg.spacer = SpacerGeometry{3.6e-4, Point2(7.5e-3, 3e-4)};
  CHECK_THROWS_AS(cfg.validate(), ConfigurationError);  // not tangent
  cfg.spacer->center = Point2(7.5e-3, 1.84e-4);
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS_AS(channel_problem(cfg), ConfigurationError);
}

TEST_CASE("spacer problem requires every tag") {
  ChannelConfig cfg;
  cfg.variant = ChannelVariant::Spacer;
  cfg.spacer = SpacerGeometry{3.6e-4, Point2(7.5e-3, 1.84e-4)};
  BoundarySpec spec;
  spec.set(Side::Left, BoundaryTag::Inlet).set(Side::Right, BoundaryTag::Outlet);
  spec.set(Side::Bottom, BoundaryTag::Membrane).set(Side::Top, BoundaryTag::Membrane);
  auto mesh = std::make_shared<const Mesh>(generate_structured_rectangle(4, 2, 1.5e-2, 1e-3, spec));
  CHECK_THROWS_AS(spacer_problem(cfg, mesh), ConfigurationError);
  CHECK_THROWS_AS(spacer_problem(cfg, nullptr), ConfigurationError);
}

TEST_CASE("scaled problem carries the channel's units") {
  ChannelConfig cfg;
  cfg.mesh.nx = 8;
  cfg.mesh.ny = 4;
  const ProblemDefinition pb = channel_problem(cfg);
  CHECK(pb.scales.length == cfg.d);
  CHECK(pb.scales.velocity == cfg.u0);
  CHECK(pb.scales.pressure == doctest::Approx(cfg.osmosis.rho0 * cfg.u0 * cfg.u0));
  CHECK(pb.physics.rho0 == 1.0);
  CHECK(pb.physics.mu0 == doctest::Approx(cfg.osmosis.mu0 / (cfg.osmosis.rho0 * cfg.u0 * cfg.d)));
  // Nondimensional law times u0 is the SI law at the same concentration.
  const Point2 x(1.0, 0.0);
  CHECK(pb.law.eval(x, 1.0) * cfg.u0 == doctest::Approx(cfg.osmosis.permeate_velocity(cfg.theta_in)));
  CHECK(pb.law.eval(x, 0.5) * cfg.u0 == doctest::Approx(cfg.osmosis.permeate_velocity(0.5 * cfg.theta_in)));
  // Inflow only on x=0, peak 6 in units of u0.
  CHECK(pb.velocity_data(Point2(0.0, 0.5)).x() == doctest::Approx(6.0));
  CHECK(pb.velocity_data(Point2(1.0, 0.5)).norm() == 0.0);
  CHECK(pb.mesh->vertices().back().x() == doctest::Approx(cfg.L / cfg.d));
}

TEST_CASE("profile of constant fields is constant, ordered and sized") {
  ChannelConfig cfg;
  cfg.mesh.nx = 6;
  cfg.mesh.ny = 3;
  const Discretization disc = discretize(channel_problem(cfg));
  SystemState s(disc.layout);
  s.u() = interpolate(*disc.velocity, VectorFn([](const Point2&) { return Vector2(2.0, 0.0); }));
  s.p().setConstant(3.0);
  s.theta() = interpolate(*disc.concentration, ScalarFn([](const Point2&) { return 1.0; }));
  const MembraneProfile prof = membrane_profile_extract(disc, s, 3);
  REQUIRE(prof.size() == 6 * 3);
  for (std::size_t i = 0; i < prof.size(); ++i) {
    CHECK(prof.theta[i] == doctest::Approx(cfg.theta_in));
    CHECK(prof.normal_velocity[i] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(prof.pressure[i] == doctest::Approx(3.0 * disc.problem.scales.pressure));
    CHECK(prof.permeate[i] == doctest::Approx(cfg.osmosis.permeate_velocity(cfg.theta_in)));
    if (i > 0) CHECK(prof.arclength[i] > prof.arclength[i - 1]);
  }
  CHECK(prof.arclength.back() < cfg.L);
  CHECK(prof.select_run(0).size() == prof.size());
  CHECK(prof.select_run(1).size() == 0);
  CHECK_THROWS_AS(membrane_profile_extract(disc, s, 0), ConfigurationError);
  // Uniform flow: inflow equals outflow, nothing crosses membrane or wall.
  const MassBalance mb = mass_balance(disc, s);
  CHECK(mb.inlet == doctest::Approx(2.0 * cfg.u0 * cfg.d));
  CHECK(mb.relative_defect() < 1e-12);
  CHECK(recirculation_fraction(disc, s, Point2(0, 0), Point2(cfg.L, cfg.d)) == 0.0);
}

TEST_CASE("coarse single-membrane channel run conserves mass and filters") {
  ChannelConfig cfg;
  cfg.mesh.nx = 24;
  cfg.mesh.ny = 8;
  const Discretization disc = discretize(channel_problem(cfg));
  NewtonOptions opt;
  opt.mode = ToleranceMode::Relative;
  opt.tol = 1e-8;
  opt.line_search = true;
  opt.stokes_warm_start = true;
  opt.max_iter = 30;
  NewtonReport rep;
  const SystemState s = solve_scenario(disc, opt, &rep);
  REQUIRE(rep.converged);
  const MassBalance mb = mass_balance(disc, s);
  CHECK(mb.relative_defect() <= 1e-10);
  CHECK(mb.permeate_law >= 0.0);
  CHECK(mb.permeate_law <= mb.outlet);
  CHECK(mb.membrane == doctest::Approx(mb.permeate_law).epsilon(1e-6));
  CHECK(std::abs(mb.wall) < 1e-12 * mb.inlet);
  const MembraneProfile prof = membrane_profile_extract(disc, s);
  double umax = 0.0;
  for (double v : prof.normal_velocity) umax = std::max(umax, std::abs(v));
  CHECK(umax < 1e-2 * cfg.u0);
  // Concentration polarisation: theta on the membrane rises above the feed.
  CHECK(*std::max_element(prof.theta.begin(), prof.theta.end()) > cfg.theta_in);
}
