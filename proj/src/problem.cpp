#include "memflow/problem.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace memflow {

void PhysicalParams::validate() const {
  if (!(mu0 > 0.0)) throw ConfigurationError("mu0 must be positive");
  if (!(rho0 > 0.0)) throw ConfigurationError("rho0 must be positive");
  if (!(D0 > 0.0)) throw ConfigurationError("D0 must be positive");
}

MembraneLaw MembraneLaw::darcy_starling(double A0, double deltaP, double kappa) {
  MembraneLaw law;
  const double ga = A0 * deltaP;
  law.g_a = [ga](const Point2&) { return ga; };
  law.g_b = A0 * kappa;
  law.g1 = 0.0;
  law.g2 = ga;
  return law;
}

MembraneLaw MembraneLaw::prescribed(ScalarFn normal_velocity) {
  MembraneLaw law;
  law.g_a = std::move(normal_velocity);
  return law;
}

bool MembraneLaw::check_bounds(const Point2& x, double theta_lo, double theta_hi) const {
  if (!(g2 > g1)) return true;
  constexpr int samples = 16;
  for (int i = 0; i <= samples; ++i) {
    const double th = theta_lo + (theta_hi - theta_lo) * i / samples;
    const double g = eval(x, th);
    if (g <= g1 || g > g2) return false;
  }
  return true;
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::DivConformingDG: return "bdm";
    case Scheme::ConformingStabilized: return "th";
    case Scheme::CrouzeixRaviart: return "cr";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "bdm" || n == "divconformingdg" || n == "dg") return Scheme::DivConformingDG;
  if (n == "th" || n == "conformingstabilized" || n == "taylor-hood") return Scheme::ConformingStabilized;
  if (n == "cr" || n == "crouzeixraviart") return Scheme::CrouzeixRaviart;
  throw ConfigurationError("unknown scheme '" + name + "' (expected bdm, th or cr)");
}

void DiscretizationParams::validate() const {
  if (k < 0 || k > 1) throw ConfigurationError("k must be 0 or 1");
  if (!std::isfinite(alpha0)) throw ConfigurationError("alpha0 must be finite");
  if (scheme == Scheme::ConformingStabilized) {
    if (alpha0 < 0.0) throw ConfigurationError("alpha0 must be non-negative for the stabilized scheme");
    if (delta < -1 || delta > 1) throw ConfigurationError("delta must be -1, 0 or 1");
    if (lambda_degree > 1) throw ConfigurationError("lambda_degree must be 0 or 1");
  } else if (!(alpha0 > 0.0)) {
    throw ConfigurationError("alpha0 must be positive");
  }
  if (scheme == Scheme::CrouzeixRaviart && k != 0)
    throw ConfigurationError("the Crouzeix-Raviart scheme is lowest order (k = 0)");
}

int DiscretizationParams::multiplier_degree() const {
  switch (scheme) {
    case Scheme::DivConformingDG: return k;
    case Scheme::ConformingStabilized: return lambda_degree < 0 ? 1 : lambda_degree;
    case Scheme::CrouzeixRaviart: return 0;
  }
  return k;
}

NitscheMode ProblemDefinition::mode(BoundaryTag t) const {
  auto it = nitsche.find(t);
  return it == nitsche.end() ? NitscheMode::None : it->second;
}

void ProblemDefinition::validate() const {
  if (!mesh) throw ConfigurationError("problem has no mesh");
  physics.validate();
  disc.validate();
  if (!velocity_data) throw ConfigurationError("problem has no boundary velocity data");
  if (!theta_inlet) throw ConfigurationError("problem has no inlet concentration");
  if (!law.g_a) throw ConfigurationError("problem has no membrane law");
}

namespace {

ConstraintComponent component_of(NitscheMode m) {
  switch (m) {
    case NitscheMode::Normal: return ConstraintComponent::Normal;
    case NitscheMode::Tangential: return ConstraintComponent::Tangential;
    default: return ConstraintComponent::Full;
  }
}

}  // namespace

Discretization discretize(const ProblemDefinition& problem) {
  problem.validate();
  Discretization d;
  d.problem = problem;
  d.mesh = problem.mesh;
  const Mesh& m = *d.mesh;
  const int k = problem.disc.k;
  auto present = [&](BoundaryTag t) { return !m.facets_with_tag(t).empty(); };

  std::vector<EssentialCondition> vel;
  ElementFamily fu, fp, fz;
  switch (problem.disc.scheme) {
    case Scheme::DivConformingDG: {
      fu = ElementFamily::bdm(k + 1);
      fp = ElementFamily::dg(k);
      fz = ElementFamily::cg(k + 1);
      EssentialCondition c;
      c.component = ConstraintComponent::Normal;
      c.vector_data = problem.velocity_data;
      for (auto t : {BoundaryTag::Inlet, BoundaryTag::Wall})
        if (present(t)) c.tags.push_back(t);
      if (!c.tags.empty()) vel.push_back(c);
      break;
    }
    case Scheme::ConformingStabilized: {
      fu = ElementFamily::cg(2, 2);
      fp = ElementFamily::cg(1);
      fz = ElementFamily::cg(2);
      for (auto t : {BoundaryTag::Inlet, BoundaryTag::Wall, BoundaryTag::Membrane}) {
        if (!present(t) || problem.mode(t) == NitscheMode::None) continue;
        EssentialCondition c;
        c.tags = {t};
        c.component = component_of(problem.mode(t));
        c.vector_data = problem.velocity_data;
        vel.push_back(c);
      }
      break;
    }
    case Scheme::CrouzeixRaviart:
      fu = ElementFamily::cr(2);
      fp = ElementFamily::dg(0);
      fz = ElementFamily::cg(1);
      break;
  }
  d.velocity = std::make_shared<Space>(build_space(d.mesh, fu, vel));
  d.pressure = std::make_shared<Space>(build_space(d.mesh, fp));
  d.multiplier = std::make_shared<MultiplierSpace>(d.mesh, problem.disc.multiplier_degree());
  std::vector<EssentialCondition> conc;
  if (present(BoundaryTag::Inlet)) {
    EssentialCondition c;
    c.tags = {BoundaryTag::Inlet};
    c.scalar_data = problem.theta_inlet;
    conc.push_back(c);
  }
  d.concentration = std::make_shared<Space>(build_space(d.mesh, fz, conc));
  d.layout = build_system_layout(*d.velocity, *d.pressure, *d.multiplier, *d.concentration);
  return d;
}

std::map<int, double> monolithic_constraints(const Discretization& disc) {
  std::map<int, double> out;
  for (const auto& [dof, v] : disc.velocity->constraints()) out[disc.layout.offset(SystemLayout::U) + dof] = v;
  for (const auto& [dof, v] : disc.concentration->constraints())
    out[disc.layout.offset(SystemLayout::Theta) + dof] = v;
  return out;
}

SystemState initial_state(const Discretization& disc) {
  SystemState s(disc.layout);
  for (const auto& [dof, v] : monolithic_constraints(disc)) s.x[dof] = v;
  return s;
}

void check_constraints(const Discretization& disc, const SystemState& state, double tol) {
  if (state.x.size() != disc.layout.total_dim) throw std::logic_error("state size does not match layout");
  for (const auto& [dof, v] : monolithic_constraints(disc))
    if (std::abs(state.x[dof] - v) > tol * std::max(1.0, std::abs(v)))
      throw std::logic_error("state violates the essential constraint on dof " + std::to_string(dof));
}

}  // namespace memflow
