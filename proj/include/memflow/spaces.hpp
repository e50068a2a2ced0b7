#pragma once

#include <array>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "memflow/common.hpp"
#include "memflow/elements.hpp"
#include "memflow/mesh.hpp"

namespace memflow {

/// Physical basis values of one cell at a list of points. Rows follow the
/// cell's local dof order; orientation signs are already applied.
struct CellBasis {
  int value_size = 1;
  std::vector<Eigen::MatrixXd> values;     ///< per point: n_local x value_size
  std::vector<Eigen::MatrixXd> gradients;  ///< per point: n_local x (2*value_size), (d0/dx, d0/dy, d1/dx, d1/dy)
  std::vector<Eigen::VectorXd> divergence; ///< per point: n_local (vector spaces only)

  [[nodiscard]] int num_points() const { return static_cast<int>(values.size()); }
};

/// A finite element space over a mesh: global dof numbering, per-cell
/// orientation signs, and essential constraints.
///
/// Vector-valued Lagrange and CR spaces interleave components: local dof
/// 2*j+c is component c of scalar basis function j, global dof 2*J+c.
class Space {
 public:
  Space(std::shared_ptr<const Mesh> mesh, ElementFamily family);

  [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
  [[nodiscard]] const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  [[nodiscard]] const ElementFamily& family() const { return family_; }
  [[nodiscard]] const ReferenceElement& reference() const { return *ref_; }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int dofs_per_cell() const { return ndofs_cell_; }
  [[nodiscard]] int value_size() const { return family_.value_size; }

  [[nodiscard]] std::span<const int> cell_dofs(int c) const {
    return {cell_dofs_.data() + static_cast<std::size_t>(c) * ndofs_cell_, static_cast<std::size_t>(ndofs_cell_)};
  }
  [[nodiscard]] std::span<const double> cell_signs(int c) const {
    return {cell_signs_.data() + static_cast<std::size_t>(c) * ndofs_cell_, static_cast<std::size_t>(ndofs_cell_)};
  }

  /// Physical basis at reference points of cell `c`.
  [[nodiscard]] CellBasis tabulate(int c, std::span<const Point2> ref_points) const;

  /// Global dofs whose support touches facet `f` from cell side `side`
  /// (0 or 1), i.e. dofs attached to the facet or its vertices.
  [[nodiscard]] std::vector<int> facet_dofs(int f) const;

  /// Physical location of a point-evaluation dof (Lagrange/CR only).
  [[nodiscard]] Point2 dof_point(int dof) const;

  [[nodiscard]] const std::map<int, double>& constraints() const { return constraints_; }
  [[nodiscard]] bool is_constrained(int dof) const { return constrained_mask_[dof] != 0; }
  /// Adds a constraint unless the dof is already constrained; returns true if added.
  bool constrain(int dof, double value);

 private:
  std::shared_ptr<const Mesh> mesh_;
  ElementFamily family_;
  const ReferenceElement* ref_;
  int dim_ = 0;
  int ndofs_cell_ = 0;
  std::vector<int> cell_dofs_;
  std::vector<double> cell_signs_;
  std::vector<Point2> dof_points_;
  std::map<int, double> constraints_;
  std::vector<char> constrained_mask_;
};

enum class ConstraintComponent { Full, Normal, Tangential };

/// Essential data on a set of boundary tags.
struct EssentialCondition {
  std::vector<BoundaryTag> tags;
  ConstraintComponent component = ConstraintComponent::Full;
  VectorFn vector_data;  ///< vector spaces
  ScalarFn scalar_data;  ///< scalar spaces
};

/// Builds a space and applies essential conditions in order (earlier
/// conditions win on shared dofs).
///
/// BDM: normal-moment dofs on tagged facets are set to the moments of
/// g.n against the edge Legendre basis (facet-wise L2 projection of g.n).
/// Lagrange/CR: nodal values; `Tangential` applies to axis-aligned facets only.
Space build_space(std::shared_ptr<const Mesh> mesh, ElementFamily family,
                  const std::vector<EssentialCondition>& conditions = {});

/// Discontinuous P_k multiplier space on the ordered membrane facets.
/// The basis on each facet is nodal in the parameter t in [0,1] running from
/// facet.vertices[0] to facet.vertices[1]: {1} for k=0, {1-t, t} for k=1.
class MultiplierSpace {
 public:
  MultiplierSpace(std::shared_ptr<const Mesh> mesh, int degree, bool allow_empty = false);

  [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
  [[nodiscard]] const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int dim() const { return static_cast<int>(facets_.size()) * (degree_ + 1); }
  [[nodiscard]] int dofs_per_facet() const { return degree_ + 1; }
  [[nodiscard]] const std::vector<int>& facets() const { return facets_; }
  /// Position of a mesh facet in the ordering, or -1.
  [[nodiscard]] int position(int facet) const;
  [[nodiscard]] int dof(int position, int local) const { return position * (degree_ + 1) + local; }
  [[nodiscard]] Eigen::VectorXd eval(double t) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  std::vector<int> facets_;
  std::map<int, int> position_;
};

/// Block ordering (u, p, lambda, theta) of the monolithic system.
struct SystemLayout {
  std::array<int, 4> offsets{};
  std::array<int, 4> sizes{};
  int total_dim = 0;

  enum Block { U = 0, P = 1, Lambda = 2, Theta = 3 };

  [[nodiscard]] int offset(Block b) const { return offsets[b]; }
  [[nodiscard]] int size(Block b) const { return sizes[b]; }
};

SystemLayout build_system_layout(const Space& velocity, const Space& pressure,
                                 const MultiplierSpace& multiplier, const Space& concentration);
SystemLayout build_system_layout(std::array<int, 4> dims);

/// Interpolation into the space's dof functionals.
Eigen::VectorXd interpolate(const Space& space, const VectorFn& field);
Eigen::VectorXd interpolate(const Space& space, const ScalarFn& field);

/// Reference coordinates, in cell `c`, of physical points.
std::vector<Point2> to_reference_points(const Mesh& mesh, int c, std::span<const Point2> physical);

/// Physical Gauss points along facet f (parameter from vertices[0] to
/// vertices[1]) plus weights already scaled by the facet length.
struct FacetQuadrature {
  std::vector<Point2> points;
  std::vector<double> params;
  std::vector<double> weights;
};
FacetQuadrature facet_quadrature(const Mesh& mesh, int f, int degree);

/// Local coefficients of a global vector on cell c (no sign applied; signs
/// live in the tabulated basis).
Eigen::VectorXd gather(const Space& space, int c, const Eigen::Ref<const Eigen::VectorXd>& coeffs);

/// Field value (value_size entries) at point q of a tabulated cell.
inline Eigen::VectorXd field_value(const CellBasis& b, int q, const Eigen::VectorXd& local) {
  return b.values[q].transpose() * local;
}
/// Field gradient at point q; for vector fields row i is grad of component i.
inline Eigen::MatrixXd field_gradient(const CellBasis& b, int q, const Eigen::VectorXd& local) {
  const Eigen::VectorXd g = b.gradients[q].transpose() * local;
  Eigen::MatrixXd out(b.value_size, 2);
  for (int i = 0; i < b.value_size; ++i) out.row(i) << g[2 * i], g[2 * i + 1];
  return out;
}

/// Reference points of a triangle rule as a point list.
std::vector<Point2> rule_points(const QuadratureRule& rule);

}  // namespace memflow
