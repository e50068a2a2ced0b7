#include "memflow/verification.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <thread>

#include "memflow/assembly.hpp"

namespace memflow {

namespace {

constexpr double pi = std::numbers::pi;

Vector2 exact_u(const Point2& x) {
  return {std::cos(pi * x.x()) * std::sin(pi * x.y()), -std::cos(pi * x.y()) * std::sin(pi * x.x())};
}

Matrix2 exact_grad_u(const Point2& x) {
  const double sx = std::sin(pi * x.x()), cx = std::cos(pi * x.x());
  const double sy = std::sin(pi * x.y()), cy = std::cos(pi * x.y());
  Matrix2 g;
  g << -pi * sx * sy, pi * cx * cy, -pi * cx * cy, pi * sx * sy;
  return g;
}

double exact_p(const Point2& x) { return std::sin(x.squaredNorm()); }
Vector2 exact_grad_p(const Point2& x) { return 2.0 * std::cos(x.squaredNorm()) * x; }
double exact_theta(const Point2& x) { return std::exp(-x.x() * x.y()); }
Vector2 exact_grad_theta(const Point2& x) { return exact_theta(x) * Vector2(-x.y(), -x.x()); }

}  // namespace

ManufacturedCase manufactured_case(const PhysicalParams& physics, Side membrane_side) {
  if (membrane_side != Side::Bottom && membrane_side != Side::Top)
    throw ConfigurationError("the manufactured membrane must lie on the bottom or top side");
  physics.validate();
  ManufacturedCase mc;
  mc.physics = physics;
  mc.membrane_side = membrane_side;
  mc.membrane_normal = membrane_side == Side::Bottom ? Vector2(0.0, -1.0) : Vector2(0.0, 1.0);
  const double mu = physics.mu0, rho = physics.rho0, D = physics.D0;
  const Vector2 n = mc.membrane_normal;

  mc.exact.u = exact_u;
  mc.exact.grad_u = exact_grad_u;
  mc.exact.p = exact_p;
  mc.exact.theta = exact_theta;
  mc.exact.grad_theta = exact_grad_theta;
  mc.exact.lambda = [mu, n](const Point2& x) {
    return -(mu * n.dot(exact_grad_u(x) * n) - exact_p(x));
  };
  // -mu lap u = 2 pi^2 mu u for this field.
  mc.f_u = [mu, rho](const Point2& x) -> Vector2 {
    const Vector2 u = exact_u(x);
    return 2.0 * pi * pi * mu * u + rho * exact_grad_u(x) * u + exact_grad_p(x);
  };
  mc.f_theta = [D](const Point2& x) {
    return -D * x.squaredNorm() * exact_theta(x) + exact_u(x).dot(exact_grad_theta(x));
  };
  return mc;
}

Vector2 momentum_residual_fd(const ManufacturedCase& mc, const Point2& x, double h) {
  const auto& u = mc.exact.u;
  const Point2 ex(h, 0.0), ey(0.0, h);
  const Vector2 lap = (u(x + ex) + u(x - ex) + u(x + ey) + u(x - ey) - 4.0 * u(x)) / (h * h);
  Matrix2 g;
  g.col(0) = (u(x + ex) - u(x - ex)) / (2.0 * h);
  g.col(1) = (u(x + ey) - u(x - ey)) / (2.0 * h);
  const Vector2 gp((mc.exact.p(x + ex) - mc.exact.p(x - ex)) / (2.0 * h),
                   (mc.exact.p(x + ey) - mc.exact.p(x - ey)) / (2.0 * h));
  return -mc.physics.mu0 * lap + mc.physics.rho0 * g * u(x) + gp;
}

double transport_residual_fd(const ManufacturedCase& mc, const Point2& x, double h) {
  const auto& t = mc.exact.theta;
  const Point2 ex(h, 0.0), ey(0.0, h);
  const double lap = (t(x + ex) + t(x - ex) + t(x + ey) + t(x - ey) - 4.0 * t(x)) / (h * h);
  const Vector2 g((t(x + ex) - t(x - ex)) / (2.0 * h), (t(x + ey) - t(x - ey)) / (2.0 * h));
  return -mc.physics.D0 * lap + mc.exact.u(x).dot(g);
}

std::shared_ptr<const Mesh> manufactured_mesh(const ManufacturedCase& mc, int n, Diagonal diagonal) {
  BoundarySpec spec;
  spec.set(Side::Left, BoundaryTag::Inlet).set(Side::Right, BoundaryTag::Outlet);
  spec.set(mc.membrane_side, BoundaryTag::Membrane);
  spec.set(mc.membrane_side == Side::Bottom ? Side::Top : Side::Bottom, BoundaryTag::Wall);
  return std::make_shared<const Mesh>(generate_structured_rectangle(n, n, 1.0, 1.0, spec, diagonal));
}

ProblemDefinition manufactured_problem(const ManufacturedCase& mc, std::shared_ptr<const Mesh> mesh,
                                       const DiscretizationParams& disc) {
  ProblemDefinition pb;
  pb.name = "manufactured";
  pb.mesh = std::move(mesh);
  pb.physics = mc.physics;
  pb.disc = disc;
  const Vector2 n = mc.membrane_normal;
  const ExactSolution ex = mc.exact;
  const double mu = mc.physics.mu0, D = mc.physics.D0;
  pb.law = MembraneLaw::prescribed([ex, n](const Point2& x) { return ex.u(x).dot(n); });
  pb.velocity_data = ex.u;
  pb.theta_inlet = ex.theta;
  pb.momentum_source = mc.f_u;
  pb.theta_source = mc.f_theta;
  pb.outlet_traction = [ex, mu](const Point2& x, const Vector2& nn) -> Vector2 {
    return mu * ex.grad_u(x) * nn - ex.p(x) * nn;
  };
  pb.theta_outlet_flux = [ex, D](const Point2& x, const Vector2& nn) { return D * ex.grad_theta(x).dot(nn); };
  pb.theta_closed_flux = [ex, D](const Point2& x, const Vector2& nn) {
    return (ex.theta(x) * ex.u(x) - D * ex.grad_theta(x)).dot(nn);
  };
  return pb;
}

std::optional<double> compute_rate(double e_i, double e_ip1, double h_i, double h_ip1) {
  if (!(e_i > 0.0) || !(e_ip1 > 0.0) || !(h_i > 0.0) || !(h_ip1 > 0.0)) return std::nullopt;
  if (h_i == h_ip1) return std::nullopt;
  return (std::log(e_i) - std::log(e_ip1)) / (std::log(h_i) - std::log(h_ip1));
}

double ConvergenceReport::value(const ConvergenceRow& r, ErrorField f) {
  switch (f) {
    case ErrorField::U: return r.errors.e_u;
    case ErrorField::P: return r.errors.e_p;
    case ErrorField::Lambda: return r.errors.e_lambda;
    case ErrorField::Theta: return r.errors.e_theta;
    case ErrorField::LambdaMesh: return r.errors.e_lambda_mesh;
  }
  return 0.0;
}

std::optional<double> ConvergenceReport::rate(std::size_t i, ErrorField f) const {
  if (i == 0 || i >= rows.size()) return std::nullopt;
  return compute_rate(value(rows[i - 1], f), value(rows[i], f), rows[i - 1].h, rows[i].h);
}

ConvergenceRow solve_level(const ManufacturedCase& mc, int n, const StudyOptions& options, SystemState* state_out,
                           std::shared_ptr<Discretization>* disc_out) {
  const auto start = std::chrono::steady_clock::now();
  ConvergenceRow row;
  auto mesh = manufactured_mesh(mc, n, options.diagonal);
  row.h = mesh->h_max();
  auto disc = std::make_shared<Discretization>(discretize(manufactured_problem(mc, mesh, options.disc)));
  row.dof = disc->layout.total_dim;
  const SystemOperator op(*disc);
  NewtonReport rep;
  SystemState state;
  try {
    state = newton_solve(op, initial_state(*disc), options.newton, &rep);
  } catch (const std::exception& e) {
    row.failure = e.what();
    state = initial_state(*disc);
  }
  row.iterations = rep.iterations;
  row.converged = rep.converged;
  row.final_residual = rep.residual_history.empty() ? 0.0 : rep.residual_history.back();
  if (!rep.converged && row.failure.empty()) row.failure = rep.message;
  const int q = default_quadrature_degree(*disc) + 2;
  row.errors = field_errors(*disc, state, mc.exact, q);
  row.div_norm = divergence_l2_norm(*disc->velocity, state.u(), q);
  row.broken_norm = broken_h1_norm(*disc->velocity, state.u(),
                                   disc->interior_penalty() ? disc->problem.nitsche
                                                            : std::map<BoundaryTag, NitscheMode>{},
                                   q);
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (state_out) *state_out = state;
  if (disc_out) *disc_out = disc;
  return row;
}

ConvergenceReport convergence_study(const ManufacturedCase& mc, const StudyOptions& options) {
  if (options.levels.size() < 2) throw ConfigurationError("a convergence study needs at least two levels");
  ConvergenceReport report;
  report.rows.resize(options.levels.size());
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(options.levels.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < options.levels.size(); i = next++) {
      try {
        report.rows[i] = solve_level(mc, options.levels[i], options);
      } catch (const std::exception& e) {
        report.rows[i].h = 1.0 / options.levels[i];
        report.rows[i].failure = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const ConvergenceRow& a, const ConvergenceRow& b) { return a.h > b.h; });
  return report;
}

std::vector<int> conforming_levels() { return {2, 3, 5, 9, 17, 33}; }

std::vector<NamedStudy> standard_studies() {
  auto make = [](Scheme scheme, int k, double alpha0, int delta, int lambda_degree, std::vector<int> levels) {
    StudyOptions o;
    o.disc = {k, alpha0, delta, scheme, lambda_degree};
    o.levels = std::move(levels);
    return o;
  };
  const std::vector<int> uniform{10, 20, 30, 40};
  std::vector<NamedStudy> out;
  out.push_back({"bdm_k0", "BDM1-P0-P0-P1, alpha0=20",
                 make(Scheme::DivConformingDG, 0, 20.0, 0, -1, uniform)});
  out.push_back({"bdm_k1", "BDM2-P1-P1-P2, alpha0=30",
                 make(Scheme::DivConformingDG, 1, 30.0, 0, -1, uniform)});
  out.push_back({"cr", "CR1-P0-P0-P1, alpha0=20", make(Scheme::CrouzeixRaviart, 0, 20.0, 0, -1, uniform)});
  out.push_back({"th_p1_unstab", "P2-P1-P1(disc)-P2 without stabilization",
                 make(Scheme::ConformingStabilized, 1, 0.0, 0, 1, conforming_levels())});
  out.push_back({"th_p0_unstab", "P2-P1-P0-P2 without stabilization",
                 make(Scheme::ConformingStabilized, 1, 0.0, 0, 0, conforming_levels())});
  for (int delta : {-1, 0, 1}) {
    const std::string tag = delta < 0 ? "m1" : std::to_string(delta);
    out.push_back({"th_p1_stab_d" + tag, "P2-P1-P1(disc)-P2, alpha0=0.1, delta=" + std::to_string(delta),
                   make(Scheme::ConformingStabilized, 1, 0.1, delta, 1, conforming_levels())});
  }
  return out;
}

}  // namespace memflow
