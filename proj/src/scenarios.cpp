#include "memflow/scenarios.hpp"

#include <algorithm>
#include <cmath>

#include "memflow/assembly.hpp"
#include "memflow/norms.hpp"
#include "memflow/solver.hpp"

namespace memflow {

void ChannelConfig::validate() const {
  if (!(L > 0.0) || !(d > 0.0)) throw ConfigurationError("channel length and height must be positive");
  if (!(u0 > 0.0)) throw ConfigurationError("u0 must be positive");
  if (!(theta_in >= 0.0)) throw ConfigurationError("theta_in must be non-negative");
  osmosis.physics().validate();
  if (!(osmosis.A0 > 0.0) || !(osmosis.kappa >= 0.0))
    throw ConfigurationError("membrane permeability must be positive and kappa non-negative");
  if (!(osmosis.permeate_velocity(theta_in) > 0.0))
    throw ConfigurationError("membrane law does not filter at the inlet concentration: A0 (dP - kappa theta_in) <= 0");
  if (mesh.nx < 2 || mesh.ny < 2) throw ConfigurationError("channel mesh needs at least 2x2 cells");
  if (!(mesh.grading >= 1.0) || !(mesh.inlet_grading >= 1.0))
    throw ConfigurationError("mesh grading ratios must be at least 1");
  if (variant == ChannelVariant::Spacer) {
    if (!spacer) throw ConfigurationError("the spacer variant needs a spacer geometry");
    const double r = 0.5 * spacer->diameter;
    if (!(r > 0.0) || spacer->diameter >= d) throw ConfigurationError("spacer diameter must lie in (0, d)");
    // The mesh keeps a thin gap at the tangent point; allow 2% of the diameter.
    if (std::abs(spacer->center.y() - r) > 0.02 * spacer->diameter)
      throw ConfigurationError("spacer must be tangent to the membrane at y=0");
  }
  disc.validate();
}

double parabolic_inlet(const ChannelConfig& cfg, double y) {
  const double dt = 0.5 * cfg.d;
  const double yt = y - dt;
  return 6.0 * cfg.u0 * (yt + dt) * (dt - yt) / (dt * dt);
}

double berman_reynolds(const ChannelConfig& cfg) {
  const double vw = cfg.osmosis.permeate_velocity(cfg.theta_in);
  return vw * (0.5 * cfg.d) / (cfg.osmosis.mu0 / cfg.osmosis.rho0);
}

double berman_inlet(const ChannelConfig& cfg, double x, double y) {
  const double vw = cfg.osmosis.permeate_velocity(cfg.theta_in);
  const double lam = 2.0 * (y - 0.5 * cfg.d) / cfg.d;
  const double l2 = lam * lam;
  const double re = berman_reynolds(cfg);
  return (cfg.u0 - vw * 2.0 * x / cfg.d) * 1.5 * (1.0 - l2) * (1.0 - re / 420.0 * (2.0 - 7.0 * l2 - 7.0 * l2 * l2));
}

std::shared_ptr<const Mesh> channel_mesh(const ChannelConfig& cfg) {
  const bool dual = cfg.variant == ChannelVariant::DualMembraneBerman;
  BoundarySpec spec;
  spec.set(Side::Left, BoundaryTag::Inlet).set(Side::Right, BoundaryTag::Outlet);
  spec.set(Side::Bottom, BoundaryTag::Membrane);
  spec.set(Side::Top, dual ? BoundaryTag::Membrane : BoundaryTag::Wall);
  const auto xs = graded_lines(cfg.mesh.nx, cfg.L, cfg.mesh.inlet_grading, true, false);
  const auto ys = graded_lines(cfg.mesh.ny, cfg.d, cfg.mesh.grading, true, dual);
  return std::make_shared<const Mesh>(generate_tensor_mesh(xs, ys, spec));
}

Scales ChannelConfig::scales() const { return {d, u0, osmosis.rho0 * u0 * u0, theta_in}; }

std::shared_ptr<const Mesh> scaled_mesh(const Mesh& mesh, double factor) {
  std::vector<Point2> vertices;
  vertices.reserve(mesh.vertices().size());
  for (const Point2& v : mesh.vertices()) vertices.push_back(factor * v);
  std::map<Mesh::EdgeKey, BoundaryTag> tags;
  for (int f : mesh.boundary_facets()) {
    const auto& fv = mesh.facet(f).vertices;
    tags[{fv[0], fv[1]}] = *mesh.tag(f);
  }
  return std::make_shared<const Mesh>(std::move(vertices), mesh.cells(), tags);
}

namespace {

// The channel is solved in units of d, u0, rho0 u0^2 and theta_in, which
// leaves mu = 1/Re, rho = 1, D = 1/Pe and a law with g_a, g_b divided by u0.
// In SI units the membrane rows of the residual are some thirteen orders of
// magnitude below the momentum rows, which blinds Newton's stopping test.
ProblemDefinition base_problem(const ChannelConfig& cfg, std::shared_ptr<const Mesh> mesh) {
  cfg.validate();
  ProblemDefinition pb;
  pb.scales = cfg.scales();
  pb.mesh = std::move(mesh);
  const OsmosisParams& os = cfg.osmosis;
  pb.physics = {os.mu0 / (os.rho0 * cfg.u0 * cfg.d), 1.0, os.D0 / (cfg.u0 * cfg.d)};
  pb.law = MembraneLaw::darcy_starling(os.A0 / cfg.u0, os.deltaP, os.kappa * cfg.theta_in);
  pb.disc = cfg.disc;
  pb.theta_inlet = [](const Point2&) { return 1.0; };
  // Only the normal velocity is imposed at the inlet, so the tangential
  // stress there is free. Walls are no-slip.
  pb.nitsche = {{BoundaryTag::Inlet, NitscheMode::Normal},
                {BoundaryTag::Wall, NitscheMode::Full},
                {BoundaryTag::Membrane, NitscheMode::Tangential},
                {BoundaryTag::Outlet, NitscheMode::None}};
  return pb;
}

// Inflow data (profile in SI units) restricted to x=0 so that walls,
// including a spacer, see zero.
VectorFn inflow(const ChannelConfig& cfg, std::function<double(double, double)> profile) {
  const double tol = 1e-9 * cfg.L / cfg.d;
  const double d = cfg.d, u0 = cfg.u0;
  return [profile = std::move(profile), tol, d, u0](const Point2& x) -> Vector2 {
    if (x.x() > tol || x.y() <= 0.0 || x.y() >= 1.0) return Vector2::Zero();
    return {profile(x.x() * d, x.y() * d) / u0, 0.0};
  };
}

}  // namespace

ProblemDefinition channel_problem(const ChannelConfig& cfg) {
  if (cfg.variant == ChannelVariant::Spacer)
    throw ConfigurationError("the spacer variant needs an imported mesh (spacer_problem)");
  ProblemDefinition pb = base_problem(cfg, scaled_mesh(*channel_mesh(cfg), 1.0 / cfg.d));
  if (cfg.variant == ChannelVariant::SingleMembrane) {
    pb.name = "channel";
    pb.velocity_data = inflow(cfg, [cfg](double, double y) { return parabolic_inlet(cfg, y); });
  } else {
    pb.name = "channel-berman";
    pb.velocity_data = inflow(cfg, [cfg](double x, double y) { return berman_inlet(cfg, x, y); });
  }
  return pb;
}

ProblemDefinition spacer_problem(const ChannelConfig& cfg, std::shared_ptr<const Mesh> mesh) {
  if (!mesh) throw ConfigurationError("spacer problem needs a mesh");
  for (auto t : kAllTags)
    if (mesh->facets_with_tag(t).empty())
      throw ConfigurationError("spacer mesh has no facets tagged " + std::string(to_string(t)));
  ProblemDefinition pb = base_problem(cfg, scaled_mesh(*mesh, 1.0 / cfg.d));
  pb.name = "spacer";
  pb.velocity_data = inflow(cfg, [cfg](double, double y) { return parabolic_inlet(cfg, y); });
  return pb;
}

SystemState solve_scenario(const Discretization& disc, const NewtonOptions& options, NewtonReport* report) {
  NewtonReport local;
  NewtonReport& rep = report ? *report : local;
  rep = NewtonReport{};
  const SystemOperator op(disc);
  const SystemState start = options.stokes_warm_start ? stokes_solve(op) : initial_state(disc);
  NewtonOptions opt = options;
  opt.stokes_warm_start = false;
  if (disc.problem.law.g_b == 0.0) return newton_solve(op, start, opt, &rep);

  // Stage one freezes the law at the inlet concentration, which removes the
  // feedback of concentration polarisation on the permeate flux; Newton on
  // the coupled law from the Stokes state can stall for fast inflow. Stage
  // two solves the full problem from there. A relative tolerance refers to
  // the stage-one initial residual.
  ProblemDefinition frozen = disc.problem;
  const MembraneLaw law = disc.problem.law;
  const ScalarFn theta_in = disc.problem.theta_inlet;
  frozen.law = MembraneLaw::prescribed([law, theta_in](const Point2& p) { return law.eval(p, theta_in(p)); });
  const Discretization fd = discretize(frozen);
  NewtonReport r1;
  const SystemState y = newton_solve(SystemOperator(fd), start, opt, &r1);
  rep.iterations = r1.iterations;
  rep.residual_history = r1.residual_history;
  rep.max_linear_residual = r1.max_linear_residual;
  if (!r1.converged) {
    rep.diverged = r1.diverged;
    rep.message = "frozen-law stage: " + r1.message;
    return y;
  }
  if (opt.mode == ToleranceMode::Relative && !r1.residual_history.empty()) {
    opt.mode = ToleranceMode::Absolute;
    opt.tol = options.tol * r1.residual_history.front();
  }
  SystemState seed(disc.layout);
  seed.x = y.x;
  NewtonReport r2;
  SystemState z = newton_solve(op, seed, opt, &r2);
  rep.iterations += r2.iterations;
  rep.residual_history.insert(rep.residual_history.end(), r2.residual_history.begin(), r2.residual_history.end());
  rep.converged = r2.converged;
  rep.diverged = r2.diverged;
  rep.max_linear_residual = std::max(rep.max_linear_residual, r2.max_linear_residual);
  rep.message = r2.message;
  return z;
}

MembraneProfile MembraneProfile::select_run(int r) const {
  MembraneProfile out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (run[i] != r) continue;
    out.run.push_back(run[i]);
    out.arclength.push_back(arclength[i]);
    out.position.push_back(position[i]);
    out.normal_velocity.push_back(normal_velocity[i]);
    out.permeate.push_back(permeate[i]);
    out.theta.push_back(theta[i]);
    out.pressure.push_back(pressure[i]);
  }
  return out;
}

MembraneProfile membrane_profile_extract(const Discretization& disc, const SystemState& state, int per_facet) {
  if (per_facet < 1) throw ConfigurationError("need at least one sample per facet");
  const Mesh& m = *disc.mesh;
  const Scales& sc = disc.problem.scales;
  const Eigen::VectorXd u = state.u(), p = state.p(), th = state.theta();
  MembraneProfile prof;
  const auto runs = membrane_runs(m, false);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    double s0 = 0.0;
    for (std::size_t i = 0; i < runs[r].facets.size(); ++i) {
      const int f = runs[r].facets[i];
      const Point2& start = m.vertex(runs[r].vertices[i]);
      const FacetGeometry geo = facet_geometry(m, f);
      FacetQuadrature fq = facet_quadrature(m, f, 2 * per_facet - 1);
      std::vector<std::size_t> order(fq.points.size());
      for (std::size_t q = 0; q < order.size(); ++q) order[q] = q;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return (fq.points[a] - start).norm() < (fq.points[b] - start).norm();
      });
      const int c = m.facet(f).cells[0];
      const auto ref = to_reference_points(m, c, fq.points);
      const CellBasis bu = disc.velocity->tabulate(c, ref);
      const CellBasis bp = disc.pressure->tabulate(c, ref);
      const CellBasis bt = disc.concentration->tabulate(c, ref);
      const Eigen::VectorXd lu = gather(*disc.velocity, c, u);
      const Eigen::VectorXd lp = gather(*disc.pressure, c, p);
      const Eigen::VectorXd lt = gather(*disc.concentration, c, th);
      for (std::size_t q : order) {
        const int qi = static_cast<int>(q);
        const Point2& x = fq.points[q];
        const double theta = field_value(bt, qi, lt)[0];
        prof.run.push_back(static_cast<int>(r));
        prof.arclength.push_back(sc.length * (s0 + (x - start).norm()));
        prof.position.push_back(sc.length * x);
        prof.normal_velocity.push_back(sc.velocity * field_value(bu, qi, lu).dot(geo.normal));
        prof.permeate.push_back(sc.velocity * disc.problem.law.eval(x, theta));
        prof.theta.push_back(sc.concentration * theta);
        prof.pressure.push_back(sc.pressure * field_value(bp, qi, lp)[0]);
      }
      s0 += geo.length;
    }
  }
  return prof;
}

double MassBalance::relative_defect() const {
  return std::abs(inlet - outlet - membrane - wall) / std::max(std::abs(inlet), 1e-300);
}

MassBalance mass_balance(const Discretization& disc, const SystemState& state) {
  const int q = default_quadrature_degree(disc) + 2;
  const Eigen::VectorXd u = state.u();
  const Space& V = *disc.velocity;
  MassBalance mb;
  mb.inlet = -normal_flux_integral(V, u, BoundaryTag::Inlet, q);
  mb.outlet = normal_flux_integral(V, u, BoundaryTag::Outlet, q);
  mb.membrane = normal_flux_integral(V, u, BoundaryTag::Membrane, q);
  mb.wall = normal_flux_integral(V, u, BoundaryTag::Wall, q);
  const Mesh& m = *disc.mesh;
  const Eigen::VectorXd th = state.theta();
  for (int f : m.facets_with_tag(BoundaryTag::Membrane)) {
    const FacetQuadrature fq = facet_quadrature(m, f, q);
    const int c = m.facet(f).cells[0];
    const CellBasis b = disc.concentration->tabulate(c, to_reference_points(m, c, fq.points));
    const Eigen::VectorXd lt = gather(*disc.concentration, c, th);
    for (std::size_t k = 0; k < fq.points.size(); ++k)
      mb.permeate_law += fq.weights[k] * disc.problem.law.eval(fq.points[k], field_value(b, static_cast<int>(k), lt)[0]);
  }
  const double flux = disc.problem.scales.velocity * disc.problem.scales.length;
  for (double* v : {&mb.inlet, &mb.outlet, &mb.membrane, &mb.wall, &mb.permeate_law}) *v *= flux;
  return mb;
}

double recirculation_fraction(const Discretization& disc, const SystemState& state, const Point2& lo,
                              const Point2& hi) {
  const Mesh& m = *disc.mesh;
  const Eigen::VectorXd u = state.u();
  const std::vector<Point2> centroid{Point2(1.0 / 3.0, 1.0 / 3.0)};
  int inside = 0, reversed = 0;
  for (int c = 0; c < m.num_cells(); ++c) {
    const Point2 x = disc.problem.scales.length * m.cell_centroid(c);
    if (x.x() < lo.x() || x.x() > hi.x() || x.y() < lo.y() || x.y() > hi.y()) continue;
    ++inside;
    const CellBasis b = disc.velocity->tabulate(c, centroid);
    if (field_value(b, 0, gather(*disc.velocity, c, u))[0] < 0.0) ++reversed;
  }
  return inside == 0 ? 0.0 : static_cast<double>(reversed) / inside;
}

}  // namespace memflow
