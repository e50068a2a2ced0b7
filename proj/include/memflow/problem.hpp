#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "memflow/common.hpp"
#include "memflow/mesh.hpp"
#include "memflow/spaces.hpp"

namespace memflow {

struct PhysicalParams {
  double mu0 = 1.0;   ///< dynamic viscosity
  double rho0 = 1.0;  ///< density
  double D0 = 1.0;    ///< solute diffusivity

  /// Throws ConfigurationError unless all values are strictly positive.
  void validate() const;
};

/// Affine membrane law g(x, theta) = g_a(x) - g_b * theta.
///
/// The Darcy-Starling form A0 (dP - kappa theta) has g_a = A0 dP and
/// g_b = A0 kappa. Manufactured problems prescribe g_a directly with g_b = 0.
struct MembraneLaw {
  ScalarFn g_a;
  double g_b = 0.0;
  /// Bounds used by check_bounds; g1 > 0 is required for filtration.
  double g1 = 0.0;
  double g2 = 0.0;

  static MembraneLaw darcy_starling(double A0, double deltaP, double kappa);
  static MembraneLaw prescribed(ScalarFn normal_velocity);

  [[nodiscard]] double eval(const Point2& x, double theta) const { return g_a(x) - g_b * theta; }
  /// True when g1 <= g(theta) <= g2 for theta sampled on [theta_lo, theta_hi]
  /// at the point x. Laws without bounds (g2 <= g1) always pass.
  [[nodiscard]] bool check_bounds(const Point2& x, double theta_lo, double theta_hi) const;
};

enum class Scheme { DivConformingDG, ConformingStabilized, CrouzeixRaviart };

std::string to_string(Scheme s);
/// Accepts "bdm", "th", "cr" (and the long names); throws ConfigurationError.
Scheme parse_scheme(const std::string& name);

struct DiscretizationParams {
  int k = 0;
  double alpha0 = 20.0;
  int delta = 0;
  Scheme scheme = Scheme::DivConformingDG;
  /// Multiplier degree for the conforming scheme; -1 selects k.
  int lambda_degree = -1;

  /// Penalty 10(k+2) used throughout the manufactured studies.
  static double default_alpha0(int k) { return 10.0 * (k + 2); }
  /// Throws ConfigurationError on an invalid combination.
  void validate() const;
  [[nodiscard]] int multiplier_degree() const;
};

/// How boundary velocity data enters the viscous form on a tag: not at all,
/// for all components, or only for the normal or tangential component.
enum class NitscheMode { None, Full, Normal, Tangential };

/// Boundary traction or flux data may depend on the outward normal.
using TractionFn = std::function<Vector2(const Point2&, const Vector2&)>;
using FluxFn = std::function<double(const Point2&, const Vector2&)>;

/// Reference magnitudes of a nondimensional problem: a computed quantity
/// times its scale gives the physical value. All ones for problems posed
/// directly in physical units.
struct Scales {
  double length = 1.0;
  double velocity = 1.0;
  double pressure = 1.0;
  double concentration = 1.0;
};

struct ProblemDefinition {
  std::string name;
  Scales scales;
  std::shared_ptr<const Mesh> mesh;
  PhysicalParams physics;
  MembraneLaw law;
  DiscretizationParams disc;

  /// Boundary velocity used by essential constraints and Nitsche terms.
  VectorFn velocity_data;
  ScalarFn theta_inlet;
  VectorFn momentum_source;      ///< empty means zero
  ScalarFn theta_source;         ///< empty means zero
  TractionFn outlet_traction;    ///< empty means do-nothing outflow
  FluxFn theta_outlet_flux;      ///< D grad(theta).n on the outlet; empty means zero
  FluxFn theta_closed_flux;      ///< (theta u - D grad theta).n on membrane and wall; empty means zero

  std::map<BoundaryTag, NitscheMode> nitsche = {{BoundaryTag::Inlet, NitscheMode::Full},
                                                {BoundaryTag::Wall, NitscheMode::Full},
                                                {BoundaryTag::Membrane, NitscheMode::Tangential},
                                                {BoundaryTag::Outlet, NitscheMode::None}};
  /// Disables the convective momentum term (Stokes variant).
  bool convection = true;

  [[nodiscard]] NitscheMode mode(BoundaryTag t) const;
  void validate() const;
};

/// Spaces and layout built from a problem.
struct Discretization {
  ProblemDefinition problem;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<Space> velocity;
  std::shared_ptr<Space> pressure;
  std::shared_ptr<MultiplierSpace> multiplier;
  std::shared_ptr<Space> concentration;
  SystemLayout layout;

  [[nodiscard]] bool interior_penalty() const { return problem.disc.scheme != Scheme::ConformingStabilized; }
};

/// Chooses the spaces of the scheme, applies essential constraints, and
/// lays out the monolithic system.
///
///  * DivConformingDG: BDM_{k+1}, DG P_k, facet P_k, CG P_{k+1}; normal
///    velocity constrained on inlet and wall.
///  * ConformingStabilized: CG P2^2, CG P1, facet P0 or P1, CG P2; velocity
///    constrained strongly on inlet, wall and the membrane tangent.
///  * CrouzeixRaviart: CR1^2, DG P0, facet P0, CG P1; velocity data enters
///    weakly only.
/// The concentration is fixed to theta_inlet on the inlet in every scheme.
Discretization discretize(const ProblemDefinition& problem);

/// Monolithic coefficient vector with block views.
struct SystemState {
  SystemLayout layout;
  Eigen::VectorXd x;

  SystemState() = default;
  explicit SystemState(const SystemLayout& l) : layout(l), x(Eigen::VectorXd::Zero(l.total_dim)) {}

  auto block(SystemLayout::Block b) { return x.segment(layout.offset(b), layout.size(b)); }
  [[nodiscard]] auto block(SystemLayout::Block b) const { return x.segment(layout.offset(b), layout.size(b)); }
  auto u() { return block(SystemLayout::U); }
  auto p() { return block(SystemLayout::P); }
  auto lambda() { return block(SystemLayout::Lambda); }
  auto theta() { return block(SystemLayout::Theta); }
  [[nodiscard]] auto u() const { return block(SystemLayout::U); }
  [[nodiscard]] auto p() const { return block(SystemLayout::P); }
  [[nodiscard]] auto lambda() const { return block(SystemLayout::Lambda); }
  [[nodiscard]] auto theta() const { return block(SystemLayout::Theta); }
};

/// Zero state with every essential constraint applied.
SystemState initial_state(const Discretization& disc);

/// Monolithic indices of constrained dofs with their values.
std::map<int, double> monolithic_constraints(const Discretization& disc);

/// Throws std::logic_error when a constrained dof differs from its value by
/// more than `tol`.
void check_constraints(const Discretization& disc, const SystemState& state, double tol = 1e-12);

}  // namespace memflow
