#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "memflow/mesh.hpp"
#include "memflow/quadrature.hpp"

namespace memflow {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FamilyKind : std::uint8_t { BDM, DiscontinuousLagrange, ContinuousLagrange, CrouzeixRaviart };

struct ElementFamily {
  FamilyKind kind = FamilyKind::ContinuousLagrange;
  int degree = 1;
  /// 1 for scalar fields, 2 for vector fields. BDM is always 2; the Lagrange
  /// and CR families are made vector-valued componentwise.
  int value_size = 1;

  static ElementFamily bdm(int degree) { return {FamilyKind::BDM, degree, 2}; }
  static ElementFamily dg(int degree, int value_size = 1) {
    return {FamilyKind::DiscontinuousLagrange, degree, value_size};
  }
  static ElementFamily cg(int degree, int value_size = 1) {
    return {FamilyKind::ContinuousLagrange, degree, value_size};
  }
  static ElementFamily cr(int value_size = 1) { return {FamilyKind::CrouzeixRaviart, 1, value_size}; }

  /// Throws std::invalid_argument when the combination is unsupported.
  void validate() const;
  [[nodiscard]] std::string name() const;
  friend bool operator==(const ElementFamily&, const ElementFamily&) = default;
};

/// Where a reference degree of freedom lives.
enum class DofEntity : std::uint8_t { Vertex, Edge, Interior };

struct DofInfo {
  DofEntity entity;
  int entity_index;  ///< local vertex / edge index; 0 for interior
  int index;         ///< position among the dofs of that entity
};

/// Values and reference gradients of every basis function at one point.
/// `values` is n_basis x value_size; `gradients` is n_basis x (2*value_size)
/// with columns (d0/dx, d0/dy, d1/dx, d1/dy).
struct BasisPointValues {
  Eigen::MatrixXd values;
  Eigen::MatrixXd gradients;
};

/// Reference triangle basis. Scalar families only carry the scalar factor;
/// componentwise vector spaces are formed by the Space layer.
///
/// Degrees of freedom:
///  * Lagrange (continuous or not): point values at the equispaced lattice,
///    vertices first, then edge nodes along each local edge, then interior;
///    the DG P0 node is the centroid.
///  * Crouzeix-Raviart: values at edge midpoints.
///  * BDM_r: per edge, normal moments against shifted Legendre polynomials
///    L_0..L_r in the edge parameter; for r >= 2 additional interior moments
///    against the lowest-order Nedelec space span{(1,0), (0,1), (-y,x)}.
///
/// Local edge i is opposite local vertex i: e0=(v1,v2), e1=(v0,v2),
/// e2=(v0,v1), parameterised from the first listed vertex.
class ReferenceElement {
 public:
  explicit ReferenceElement(ElementFamily family);

  [[nodiscard]] const ElementFamily& family() const { return family_; }
  [[nodiscard]] int num_basis() const { return static_cast<int>(dofs_.size()); }
  /// 2 for BDM, otherwise 1 (the scalar factor).
  [[nodiscard]] int reference_value_size() const { return vector_ ? 2 : 1; }
  [[nodiscard]] const std::vector<DofInfo>& dofs() const { return dofs_; }
  /// Lattice coordinates of point-evaluation dofs (empty for BDM).
  [[nodiscard]] const std::vector<Point2>& nodes() const { return nodes_; }

  /// Throws DomainError when the point lies outside the closed reference cell.
  [[nodiscard]] BasisPointValues eval_basis(const Point2& ref_point) const;
  /// Same without the domain check (facet points computed from physical
  /// coordinates may sit a rounding error outside).
  [[nodiscard]] BasisPointValues eval_basis_unchecked(const Point2& ref_point) const;

 private:
  ElementFamily family_;
  bool vector_ = false;
  std::vector<std::array<int, 2>> exponents_;
  Eigen::MatrixXd coefficients_;  // (value_size * n_mono) x n_basis
  std::vector<DofInfo> dofs_;
  std::vector<Point2> nodes_;
};

/// Shared immutable reference element for a family.
const ReferenceElement& reference_element(const ElementFamily& family);

/// Shifted Legendre polynomial L_j on [0,1] (L_0 = 1, L_1 = 2t-1, ...).
double shifted_legendre(int j, double t);

/// Equispaced Lagrange nodes on the reference triangle in dof order.
std::vector<Point2> lagrange_lattice(int degree);

/// Local edge endpoints (local vertex indices), first < second.
std::array<int, 2> local_edge_vertices(int local_edge);
Point2 reference_vertex(int i);
/// Unit outward normal of a reference edge.
Point2 reference_edge_normal(int local_edge);

/// Affine map x = B x_hat + b from the reference triangle.
struct CellMap {
  Eigen::Matrix2d B;
  Eigen::Vector2d b;
  double detB = 0.0;
  Eigen::Matrix2d Binv;

  /// Throws GeometryError for non-positive orientation.
  static CellMap from_vertices(const Point2& p0, const Point2& p1, const Point2& p2);
  static CellMap of_cell(const Mesh& mesh, int cell);

  [[nodiscard]] Point2 to_physical(const Point2& ref) const { return B * ref + b; }
  [[nodiscard]] Point2 to_reference(const Point2& x) const { return Binv * (x - b); }
};

struct PiolaValues {
  Eigen::Vector2d value;
  Eigen::Matrix2d gradient;  ///< (i,j) = d v_i / d x_j
  double divergence = 0.0;
};

/// Contravariant Piola transform: v = B v_hat / detB, grad v = B grad_hat v_hat B^-1 / detB.
PiolaValues piola_map(const CellMap& map, const Eigen::Vector2d& ref_value,
                      const Eigen::Matrix2d& ref_gradient);

}  // namespace memflow
