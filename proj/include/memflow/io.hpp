#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "memflow/problem.hpp"
#include "memflow/scenarios.hpp"
#include "memflow/solver.hpp"
#include "memflow/verification.hpp"

namespace memflow {

/// A file could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CaseKind { Manufactured, Channel, Berman, Spacer };

std::string to_string(CaseKind c);
CaseKind parse_case(const std::string& name);

/// Everything a CLI run needs. Built from a JSON document whose schema is
/// described in the README; unknown keys are rejected.
struct RunConfig {
  CaseKind kind = CaseKind::Manufactured;
  DiscretizationParams disc;
  bool alpha0_given = false;
  std::vector<int> levels{10, 20, 30, 40};
  Diagonal diagonal = Diagonal::Right;
  /// Physical parameters for manufactured runs (all 1 by default).
  PhysicalParams physics;
  /// Channel geometry, osmosis constants and generated-mesh resolution.
  ChannelConfig channel;
  std::optional<std::filesystem::path> mesh_file;
  MeshFormat mesh_format = MeshFormat::Gmsh2;
  NewtonOptions newton;
  std::filesystem::path output = "results";
  int jobs = 1;

  /// Sets alpha0 to 10(k+2) unless it was given explicitly, then validates
  /// the discretization and, for channel cases, the channel configuration.
  void finalize();
};

/// Parses and validates a configuration document. Errors name the offending
/// key; an unknown key suggests the closest known one.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_string(const std::string& text);

/// Default configuration for a case, already finalized.
RunConfig default_config(CaseKind kind);

/// Closest candidate by edit distance, if reasonably close.
std::optional<std::string> closest_key(const std::string& key, const std::vector<std::string>& candidates);

/// Problem definition of a channel case, importing the mesh when configured.
ProblemDefinition build_case_problem(const RunConfig& cfg);

/// Table columns: DoF,h,e(u),r(u),e(p),r(p),e(λ),r(λ),e(θ),r(θ),it.
/// Errors as %.2e, rates with two decimals, '*' for the first row's rates.
void write_convergence_csv(const ConvergenceReport& report, std::ostream& out);
void write_convergence_csv(const ConvergenceReport& report, const std::filesystem::path& path);

struct CsvRow {
  int dof = 0;
  double h = 0.0;
  std::array<double, 4> errors{};                ///< u, p, lambda, theta
  std::array<std::optional<double>, 4> rates{};  ///< empty where '*' or nan
  int iterations = 0;
};
std::vector<CsvRow> parse_convergence_csv(std::istream& in);
std::vector<CsvRow> parse_convergence_csv(const std::filesystem::path& path);

/// Membrane samples as CSV: run,s,x,y,u_n,g,theta,p.
void write_profile_csv(const MembraneProfile& profile, const std::filesystem::path& path);

/// Legacy ASCII unstructured grid: triangles followed by the tagged
/// boundary edges as line cells. Point data are vertex averages of the
/// cellwise fields (velocity, pressure, concentration); cell data carry
/// the boundary tag (-1 on triangles). The multiplier goes to a separate
/// polyline file `membrane_path`, when given.
void write_vtk(const Discretization& disc, const SystemState& state, const std::filesystem::path& path);
void write_membrane_vtk(const Discretization& disc, const SystemState& state, const std::filesystem::path& path);

/// A saved state carries the configuration text and the refinement level
/// so that the discretization can be rebuilt.
struct SavedState {
  std::string config_json;
  int level = 0;
  std::array<int, 4> block_sizes{};
  Eigen::VectorXd x;
};
void save_state(const SavedState& s, const std::filesystem::path& path);
SavedState load_state(const std::filesystem::path& path);

/// Canonical JSON text of a configuration (parse_config_string inverts it).
std::string config_to_json(const RunConfig& cfg);

}  // namespace memflow
