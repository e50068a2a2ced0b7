#include "memflow/elements.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/LU>

namespace memflow {

void ElementFamily::validate() const {
  if (value_size != 1 && value_size != 2) throw std::invalid_argument("value_size must be 1 or 2");
  switch (kind) {
    case FamilyKind::BDM:
      if (degree < 1 || degree > 2) throw std::invalid_argument("BDM degree must be 1 or 2");
      if (value_size != 2) throw std::invalid_argument("BDM is vector-valued");
      break;
    case FamilyKind::DiscontinuousLagrange:
      if (degree < 0 || degree > 3) throw std::invalid_argument("DG degree must be in [0,3]");
      break;
    case FamilyKind::ContinuousLagrange:
      if (degree < 1 || degree > 3) throw std::invalid_argument("CG degree must be in [1,3]");
      break;
    case FamilyKind::CrouzeixRaviart:
      if (degree != 1) throw std::invalid_argument("Crouzeix-Raviart degree must be 1");
      break;
  }
}

std::string ElementFamily::name() const {
  std::string base;
  switch (kind) {
    case FamilyKind::BDM: base = "BDM"; break;
    case FamilyKind::DiscontinuousLagrange: base = "DG"; break;
    case FamilyKind::ContinuousLagrange: base = "P"; break;
    case FamilyKind::CrouzeixRaviart: base = "CR"; break;
  }
  base += std::to_string(degree);
  if (value_size == 2 && kind != FamilyKind::BDM) base += "^2";
  return base;
}

double shifted_legendre(int j, double t) {
  const double s = 2.0 * t - 1.0;
  switch (j) {
    case 0: return 1.0;
    case 1: return s;
    case 2: return 0.5 * (3.0 * s * s - 1.0);
    case 3: return 0.5 * (5.0 * s * s * s - 3.0 * s);
    default: break;
  }
  double p0 = 1.0, p1 = s;
  for (int n = 1; n < j; ++n) {
    const double p2 = ((2.0 * n + 1.0) * s * p1 - n * p0) / (n + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

Point2 reference_vertex(int i) {
  switch (i) {
    case 0: return {0.0, 0.0};
    case 1: return {1.0, 0.0};
    default: return {0.0, 1.0};
  }
}

std::array<int, 2> local_edge_vertices(int local_edge) {
  switch (local_edge) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

Point2 reference_edge_normal(int local_edge) {
  switch (local_edge) {
    case 0: return Point2(1.0, 1.0) / std::sqrt(2.0);
    case 1: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

std::vector<Point2> lagrange_lattice(int degree) {
  std::vector<Point2> pts;
  if (degree == 0) {
    pts.emplace_back(1.0 / 3.0, 1.0 / 3.0);
    return pts;
  }
  for (int v = 0; v < 3; ++v) pts.push_back(reference_vertex(v));
  for (int e = 0; e < 3; ++e) {
    const auto ev = local_edge_vertices(e);
    const Point2 a = reference_vertex(ev[0]), b = reference_vertex(ev[1]);
    for (int m = 1; m < degree; ++m) pts.push_back(a + (b - a) * (static_cast<double>(m) / degree));
  }
  for (int j = 1; j < degree; ++j)
    for (int i = 1; i + j < degree; ++i)
      pts.emplace_back(static_cast<double>(i) / degree, static_cast<double>(j) / degree);
  return pts;
}

namespace {

std::vector<std::array<int, 2>> monomial_exponents(int degree) {
  std::vector<std::array<int, 2>> ex;
  for (int d = 0; d <= degree; ++d)
    for (int b = 0; b <= d; ++b) ex.push_back({d - b, b});
  return ex;
}

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// Monomial values and first derivatives at a point.
void eval_monomials(const std::vector<std::array<int, 2>>& ex, const Point2& p, Eigen::VectorXd& m,
                    Eigen::VectorXd& mx, Eigen::VectorXd& my) {
  const int n = static_cast<int>(ex.size());
  m.resize(n);
  mx.resize(n);
  my.resize(n);
  for (int j = 0; j < n; ++j) {
    const int a = ex[j][0], b = ex[j][1];
    m[j] = ipow(p.x(), a) * ipow(p.y(), b);
    mx[j] = a > 0 ? a * ipow(p.x(), a - 1) * ipow(p.y(), b) : 0.0;
    my[j] = b > 0 ? b * ipow(p.x(), a) * ipow(p.y(), b - 1) : 0.0;
  }
}

}  // namespace

ReferenceElement::ReferenceElement(ElementFamily family) : family_(family) {
  family_.validate();
  const int r = family_.degree;
  exponents_ = monomial_exponents(r);
  const int nmono = static_cast<int>(exponents_.size());
  Eigen::VectorXd m, mx, my;

  if (family_.kind == FamilyKind::BDM) {
    vector_ = true;
    const int nb = 2 * nmono;
    Eigen::MatrixXd V(nb, nb);
    int row = 0;
    const QuadratureRule line = quadrature_rule(RefDomain::Interval, 2 * r + 2);
    for (int e = 0; e < 3; ++e) {
      const auto ev = local_edge_vertices(e);
      const Point2 a = reference_vertex(ev[0]), b = reference_vertex(ev[1]);
      const Point2 n = reference_edge_normal(e);
      const double len = (b - a).norm();
      for (int j = 0; j <= r; ++j) {
        V.row(row).setZero();
        for (int q = 0; q < line.size(); ++q) {
          const double t = line.points(q, 0);
          eval_monomials(exponents_, a + t * (b - a), m, mx, my);
          const double w = line.weights[q] * len * shifted_legendre(j, t);
          V.row(row).head(nmono) += w * n.x() * m.transpose();
          V.row(row).tail(nmono) += w * n.y() * m.transpose();
        }
        dofs_.push_back({DofEntity::Edge, e, j});
        ++row;
      }
    }
    if (r >= 2) {
      if (r != 2) throw std::invalid_argument("BDM interior moments implemented for degree 2 only");
      const QuadratureRule tri = quadrature_rule(RefDomain::Triangle, 2 * r + 2);
      for (int i = 0; i < 3; ++i) {
        V.row(row).setZero();
        for (int q = 0; q < tri.size(); ++q) {
          const Point2 p(tri.points(q, 0), tri.points(q, 1));
          eval_monomials(exponents_, p, m, mx, my);
          Eigen::Vector2d test;
          if (i == 0) test = {1.0, 0.0};
          else if (i == 1) test = {0.0, 1.0};
          else test = {-p.y(), p.x()};
          V.row(row).head(nmono) += tri.weights[q] * test.x() * m.transpose();
          V.row(row).tail(nmono) += tri.weights[q] * test.y() * m.transpose();
        }
        dofs_.push_back({DofEntity::Interior, 0, i});
        ++row;
      }
    }
    if (row != nb) throw std::logic_error("BDM dof count mismatch");
    coefficients_ = V.fullPivLu().inverse();
    return;
  }

  if (family_.kind == FamilyKind::CrouzeixRaviart) {
    for (int e = 0; e < 3; ++e) {
      const auto ev = local_edge_vertices(e);
      nodes_.push_back(0.5 * (reference_vertex(ev[0]) + reference_vertex(ev[1])));
      dofs_.push_back({DofEntity::Edge, e, 0});
    }
  } else {
    nodes_ = lagrange_lattice(r);
    if (r == 0) {
      dofs_.push_back({DofEntity::Interior, 0, 0});
    } else {
      for (int v = 0; v < 3; ++v) dofs_.push_back({DofEntity::Vertex, v, 0});
      for (int e = 0; e < 3; ++e)
        for (int k = 0; k < r - 1; ++k) dofs_.push_back({DofEntity::Edge, e, k});
      int k = 0;
      for (int j = 1; j < r; ++j)
        for (int i = 1; i + j < r; ++i) dofs_.push_back({DofEntity::Interior, 0, k++});
    }
    if (family_.kind == FamilyKind::DiscontinuousLagrange)
      for (auto& d : dofs_) d = {DofEntity::Interior, 0, static_cast<int>(&d - dofs_.data())};
  }
  const int nb = static_cast<int>(nodes_.size());
  if (nb != nmono) throw std::logic_error("Lagrange node count does not match P_r dimension");
  Eigen::MatrixXd V(nb, nb);
  for (int i = 0; i < nb; ++i) {
    eval_monomials(exponents_, nodes_[i], m, mx, my);
    V.row(i) = m.transpose();
  }
  coefficients_ = V.fullPivLu().inverse();
}

BasisPointValues ReferenceElement::eval_basis(const Point2& p) const {
  constexpr double tol = 1e-12;
  if (p.x() < -tol || p.y() < -tol || p.x() + p.y() > 1.0 + tol)
    throw DomainError("point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                      ") lies outside the reference triangle");
  return eval_basis_unchecked(p);
}

BasisPointValues ReferenceElement::eval_basis_unchecked(const Point2& p) const {
  Eigen::VectorXd m, mx, my;
  eval_monomials(exponents_, p, m, mx, my);
  const int nmono = static_cast<int>(exponents_.size());
  const int nb = num_basis();
  BasisPointValues out;
  if (!vector_) {
    out.values = coefficients_.transpose() * m;
    out.gradients.resize(nb, 2);
    out.gradients.col(0) = coefficients_.transpose() * mx;
    out.gradients.col(1) = coefficients_.transpose() * my;
    return out;
  }
  const auto C0 = coefficients_.topRows(nmono);
  const auto C1 = coefficients_.bottomRows(nmono);
  out.values.resize(nb, 2);
  out.values.col(0) = C0.transpose() * m;
  out.values.col(1) = C1.transpose() * m;
  out.gradients.resize(nb, 4);
  out.gradients.col(0) = C0.transpose() * mx;
  out.gradients.col(1) = C0.transpose() * my;
  out.gradients.col(2) = C1.transpose() * mx;
  out.gradients.col(3) = C1.transpose() * my;
  return out;
}

const ReferenceElement& reference_element(const ElementFamily& family) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int>, std::unique_ptr<ReferenceElement>> cache;
  const auto key = std::make_tuple(static_cast<int>(family.kind), family.degree);
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot) {
    ElementFamily scalar = family;
    scalar.value_size = family.kind == FamilyKind::BDM ? 2 : 1;
    slot = std::make_unique<ReferenceElement>(scalar);
  }
  return *slot;
}

CellMap CellMap::from_vertices(const Point2& p0, const Point2& p1, const Point2& p2) {
  CellMap m;
  m.B.col(0) = p1 - p0;
  m.B.col(1) = p2 - p0;
  m.b = p0;
  m.detB = m.B.determinant();
  if (!(m.detB > 0.0))
    throw GeometryError("cell map has non-positive determinant " + std::to_string(m.detB));
  m.Binv = m.B.inverse();
  return m;
}

CellMap CellMap::of_cell(const Mesh& mesh, int cell) {
  const auto& c = mesh.cell(cell);
  return from_vertices(mesh.vertex(c[0]), mesh.vertex(c[1]), mesh.vertex(c[2]));
}

PiolaValues piola_map(const CellMap& map, const Eigen::Vector2d& ref_value,
                      const Eigen::Matrix2d& ref_gradient) {
  if (!(map.detB > 0.0)) throw GeometryError("Piola map requires a positively oriented cell");
  PiolaValues out;
  const double s = 1.0 / map.detB;
  out.value = s * map.B * ref_value;
  out.gradient = s * map.B * ref_gradient * map.Binv;
  out.divergence = s * ref_gradient.trace();
  return out;
}

}  // namespace memflow
