#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace memflow {

using Point2 = Eigen::Vector2d;

/// Raised when a mesh cannot be built or loaded.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BoundaryTag : std::uint8_t { Inlet, Outlet, Wall, Membrane };

inline constexpr std::array<BoundaryTag, 4> kAllTags = {
    BoundaryTag::Inlet, BoundaryTag::Outlet, BoundaryTag::Wall, BoundaryTag::Membrane};

std::string_view to_string(BoundaryTag tag);
/// Parses "inlet|outlet|wall|membrane"; throws MeshError otherwise.
BoundaryTag parse_tag(std::string_view name);

/// An edge of the triangulation. Vertices are stored in ascending index order,
/// which also fixes the orientation of facet-local parameterisations.
struct Facet {
  std::array<int, 2> vertices{};
  /// cells[1] == -1 on the boundary.
  std::array<int, 2> cells{-1, -1};
  /// Local edge index of this facet inside each adjacent cell.
  std::array<int, 2> local_index{-1, -1};

  [[nodiscard]] bool is_boundary() const { return cells[1] < 0; }
};

struct FacetGeometry {
  Point2 normal;  ///< unit, outward from the first adjacent cell
  double length = 0.0;
  Point2 midpoint;
};

/// Immutable 2D triangulation with boundary facets classified into
/// inlet / outlet / wall / membrane.
///
/// Cells are counterclockwise vertex triples. Local edge i of a cell is the
/// edge opposite local vertex i, i.e. (v1,v2), (v0,v2), (v0,v1).
class Mesh {
 public:
  using Cell = std::array<int, 3>;
  using EdgeKey = std::pair<int, int>;

  /// Builds facet adjacency and validates every invariant. `boundary_tags`
  /// is keyed by (min vertex, max vertex).
  Mesh(std::vector<Point2> vertices, std::vector<Cell> cells,
       const std::map<EdgeKey, BoundaryTag>& boundary_tags);

  [[nodiscard]] const std::vector<Point2>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<Cell>& cells() const { return cells_; }
  [[nodiscard]] const std::vector<Facet>& facets() const { return facets_; }

  [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices_.size()); }
  [[nodiscard]] int num_cells() const { return static_cast<int>(cells_.size()); }
  [[nodiscard]] int num_facets() const { return static_cast<int>(facets_.size()); }

  [[nodiscard]] const Point2& vertex(int v) const { return vertices_[v]; }
  [[nodiscard]] const Cell& cell(int c) const { return cells_[c]; }
  [[nodiscard]] const Facet& facet(int f) const { return facets_[f]; }

  /// Global facet index of local edge `local` of cell `c`.
  [[nodiscard]] int cell_facet(int c, int local) const { return cell_facets_[c][local]; }

  /// Tag of a boundary facet; std::nullopt for interior facets.
  [[nodiscard]] std::optional<BoundaryTag> tag(int f) const;
  [[nodiscard]] bool has_tag(int f, BoundaryTag t) const;
  [[nodiscard]] std::vector<int> facets_with_tag(BoundaryTag t) const;

  [[nodiscard]] std::vector<int> interior_facets() const;
  [[nodiscard]] std::vector<int> boundary_facets() const;

  [[nodiscard]] double cell_area(int c) const;
  /// Longest edge of the cell.
  [[nodiscard]] double cell_diameter(int c) const;
  [[nodiscard]] double h_max() const { return h_max_; }
  [[nodiscard]] Point2 cell_centroid(int c) const;

 private:
  std::vector<Point2> vertices_;
  std::vector<Cell> cells_;
  std::vector<Facet> facets_;
  std::vector<std::array<int, 3>> cell_facets_;
  std::vector<std::int8_t> facet_tag_;  // -1 interior
  double h_max_ = 0.0;
};

/// Throws std::out_of_range on an invalid index.
FacetGeometry facet_geometry(const Mesh& mesh, int facet);

enum class Diagonal : std::uint8_t { Right, Left, Crossed };

enum class Side : std::uint8_t { Bottom, Right, Top, Left };

/// One tagged interval along a side, in the coordinate running along that
/// side (x for bottom/top, y for left/right), in physical units.
struct SideInterval {
  double begin;
  double end;
  BoundaryTag tag;
};

/// Per-side tagging of a rectangle's boundary. A side carries either one tag
/// or a list of non-overlapping intervals covering it.
class BoundarySpec {
 public:
  BoundarySpec& set(Side side, BoundaryTag tag);
  BoundarySpec& set(Side side, std::vector<SideInterval> intervals);

  /// Tag for a boundary point at coordinate `s` along `side`.
  [[nodiscard]] BoundaryTag tag_at(Side side, double s) const;
  [[nodiscard]] bool covers(Side side) const;
  void validate(double lx, double ly) const;

 private:
  std::map<Side, std::vector<SideInterval>> sides_;
  std::map<Side, BoundaryTag> whole_;
};

/// Channel layout: inlet x=0, outlet x=Lx, membrane y=0, wall y=Ly.
BoundarySpec channel_boundary();

/// Uniform nx-by-ny triangulation of [0,Lx]x[0,Ly].
Mesh generate_structured_rectangle(int nx, int ny, double lx, double ly,
                                   const BoundarySpec& spec,
                                   Diagonal diagonal = Diagonal::Right);

/// Tensor-product triangulation on the given (strictly increasing) grid
/// lines. The rectangle is [x.front(), x.back()] x [y.front(), y.back()].
Mesh generate_tensor_mesh(const std::vector<double>& x_lines,
                          const std::vector<double>& y_lines,
                          const BoundarySpec& spec,
                          Diagonal diagonal = Diagonal::Right);

/// Grid lines on [0, length] with n cells, geometrically graded so that the
/// cells next to the selected ends are `ratio` times smaller than the middle.
std::vector<double> graded_lines(int n, double length, double ratio,
                                 bool refine_low, bool refine_high);

enum class MeshFormat : std::uint8_t { Gmsh2, Json };

MeshFormat parse_mesh_format(std::string_view name);

Mesh import_mesh(const std::filesystem::path& path, MeshFormat format);
Mesh read_gmsh2(std::istream& in);
Mesh read_mesh_json(std::istream& in);
void write_mesh_json(const Mesh& mesh, std::ostream& out);
void write_gmsh2(const Mesh& mesh, std::ostream& out);

/// A connected run of membrane facets ordered by arc length.
struct MembraneRun {
  std::vector<int> facets;
  /// Vertex sequence along the run (facets.size() + 1 entries).
  std::vector<int> vertices;
};

/// Membrane facets grouped into runs. Runs are ordered by the position of
/// their starting point (lowest y, then lowest x); inside a run facets go in
/// increasing x (or increasing y for vertical runs). Throws MeshError when
/// `require_nonempty` and no membrane facet exists.
std::vector<MembraneRun> membrane_runs(const Mesh& mesh, bool require_nonempty = true);

/// Concatenation of the runs' facets.
std::vector<int> membrane_facet_mesh(const Mesh& mesh, bool require_nonempty = true);

}  // namespace memflow
