#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "memflow/problem.hpp"
#include "memflow/solver.hpp"

namespace memflow {

/// Reverse-osmosis parameters in SI units. The defaults are the seawater
/// desalination setting: a 1.5 cm channel fed at 600 mol/m^3.
struct OsmosisParams {
  double kappa = 4955.144;  ///< J/mol, osmotic coefficient
  double A0 = 1.189e-11;    ///< m/(Pa s), membrane permeability
  double deltaP = 4053000;  ///< Pa, applied transmembrane pressure
  double mu0 = 8.9e-4;      ///< Pa s
  double rho0 = 1027.2;     ///< kg/m^3
  double D0 = 1.5e-9;       ///< m^2/s

  [[nodiscard]] MembraneLaw law() const { return MembraneLaw::darcy_starling(A0, deltaP, kappa); }
  [[nodiscard]] PhysicalParams physics() const { return {mu0, rho0, D0}; }
  /// Permeate velocity A0 (dP - kappa theta).
  [[nodiscard]] double permeate_velocity(double theta) const { return A0 * (deltaP - kappa * theta); }
};

enum class ChannelVariant { SingleMembrane, DualMembraneBerman, Spacer };

struct SpacerGeometry {
  double diameter = 3.6e-4;
  Point2 center{7.5e-3, 1.8e-4};
};

/// Resolution of the generated channel mesh. Cells next to each membrane are
/// `grading` times thinner than those in the middle of the channel.
struct ChannelMesh {
  int nx = 80;
  int ny = 16;
  double grading = 20.0;
  /// Streamwise refinement ratio toward the inlet, where the
  /// concentration layer starts.
  double inlet_grading = 6.0;
};

struct ChannelConfig {
  double L = 1.5e-2;       ///< channel length (m)
  double d = 1e-3;         ///< channel height (m)
  double u0 = 1.29e-1;     ///< inlet velocity scale (m/s)
  double theta_in = 600;   ///< inlet concentration (mol/m^3)
  OsmosisParams osmosis;
  ChannelVariant variant = ChannelVariant::SingleMembrane;
  std::optional<SpacerGeometry> spacer;
  ChannelMesh mesh;
  DiscretizationParams disc{1, DiscretizationParams::default_alpha0(1), 0, Scheme::DivConformingDG, -1};

  /// Units of the nondimensional channel problem: d, u0, rho0 u0^2, theta_in.
  [[nodiscard]] Scales scales() const;

  /// Throws ConfigurationError on non-positive sizes, on a law that does not
  /// filter at theta_in, or on a spacer that is not tangent to the membrane.
  void validate() const;
};

/// Inlet profile centred on the channel, y measured from the bottom wall:
/// 6 u0 (y~ + d/2)(d/2 - y~) / (d/2)^2 with y~ = y - d/2.
double parabolic_inlet(const ChannelConfig& cfg, double y);

/// Berman inflow for a channel with two porous walls, with lambda = 2y~/d,
/// Re = v_w (d/2) rho0 / mu0 and v_w the permeate velocity at theta_in:
/// (u0 - v_w 2x/d) (3/2)(1 - lambda^2) [1 - Re/420 (2 - 7 lambda^2 - 7 lambda^4)].
double berman_inlet(const ChannelConfig& cfg, double x, double y);

/// Reynolds number used by the Berman profile.
double berman_reynolds(const ChannelConfig& cfg);

/// Channel of the configured variant on a generated mesh graded toward the
/// membranes: membrane at y=0 (and y=d for the dual variant), wall at y=d,
/// inflow at x=0 with free tangential stress, do-nothing outflow at x=L.
/// The problem is nondimensional (see ChannelConfig::scales); the profile,
/// mass balance, recirculation and output routines report SI values.
ProblemDefinition channel_problem(const ChannelConfig& cfg);

/// Generated mesh used by channel_problem, in metres.
std::shared_ptr<const Mesh> channel_mesh(const ChannelConfig& cfg);

/// Copy of a mesh with every coordinate multiplied by `factor`.
std::shared_ptr<const Mesh> scaled_mesh(const Mesh& mesh, double factor);

/// Same physics on an imported spacer mesh given in metres. Requires inlet,
/// outlet, membrane and wall facets, with the spacer boundary tagged wall.
ProblemDefinition spacer_problem(const ChannelConfig& cfg, std::shared_ptr<const Mesh> mesh);

/// Newton in two stages when the law depends on the concentration: first
/// with the law frozen at the inlet concentration (from the Stokes warm
/// start when `options` asks for it), then the full problem from there.
/// The report covers both stages.
SystemState solve_scenario(const Discretization& disc, const NewtonOptions& options, NewtonReport* report);

/// Samples along the membrane ordered by arc length. `run` distinguishes
/// separate membranes.
struct MembraneProfile {
  std::vector<int> run;
  std::vector<double> arclength;
  std::vector<Point2> position;
  std::vector<double> normal_velocity;  ///< u_h.n, positive out of the channel
  std::vector<double> permeate;         ///< g(theta_h)
  std::vector<double> theta;
  std::vector<double> pressure;

  [[nodiscard]] std::size_t size() const { return arclength.size(); }
  /// Samples of one run only.
  [[nodiscard]] MembraneProfile select_run(int r) const;
};

/// `per_facet` Gauss samples on every membrane facet. Pressure and velocity
/// are taken from the cell inside the domain.
MembraneProfile membrane_profile_extract(const Discretization& disc, const SystemState& state, int per_facet = 2);

struct MassBalance {
  double inlet = 0.0;     ///< inflow, positive into the channel
  double outlet = 0.0;    ///< outflow
  double membrane = 0.0;  ///< permeate flow out through the membranes
  double wall = 0.0;      ///< flow through walls (zero up to round-off)
  double permeate_law = 0.0;  ///< integral of g(theta_h) over the membranes

  /// |inlet - outlet - membrane - wall| / inlet.
  [[nodiscard]] double relative_defect() const;
};

MassBalance mass_balance(const Discretization& disc, const SystemState& state);

/// Fraction of velocity samples with negative streamwise component inside
/// the box [x0,x1] x [y0,y1] (metres); sampled at cell centroids.
double recirculation_fraction(const Discretization& disc, const SystemState& state, const Point2& lo,
                              const Point2& hi);

}  // namespace memflow
