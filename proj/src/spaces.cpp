#include "memflow/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace memflow {

namespace {

bool is_finite(const Vector2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

Vector2 eval_checked(const VectorFn& f, const Point2& x) {
  Vector2 v;
  try {
    v = f(x);
  } catch (const std::exception& e) {
    throw EvaluationError(std::string("field evaluation failed: ") + e.what());
  }
  if (!is_finite(v))
    throw EvaluationError("field is not finite at (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) + ")");
  return v;
}

double eval_checked(const ScalarFn& f, const Point2& x) {
  double v;
  try {
    v = f(x);
  } catch (const std::exception& e) {
    throw EvaluationError(std::string("field evaluation failed: ") + e.what());
  }
  if (!std::isfinite(v))
    throw EvaluationError("field is not finite at (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) + ")");
  return v;
}

}  // namespace

Space::Space(std::shared_ptr<const Mesh> mesh, ElementFamily family)
    : mesh_(std::move(mesh)), family_(family), ref_(&reference_element(family)) {
  family_.validate();
  const Mesh& m = *mesh_;
  const int nc = m.num_cells();
  const int nf = m.num_facets();
  const int nv = m.num_vertices();
  const int nscalar = ref_->num_basis();
  const bool componentwise = family_.kind != FamilyKind::BDM && family_.value_size == 2;
  const int vs = componentwise ? 2 : 1;
  ndofs_cell_ = nscalar * vs;
  cell_dofs_.assign(static_cast<std::size_t>(nc) * ndofs_cell_, -1);
  cell_signs_.assign(static_cast<std::size_t>(nc) * ndofs_cell_, 1.0);

  // Scalar numbering first, then expanded per component.
  std::vector<int> scalar_dofs(static_cast<std::size_t>(nc) * nscalar, -1);
  std::vector<double> scalar_signs(static_cast<std::size_t>(nc) * nscalar, 1.0);
  int nscalar_global = 0;
  const auto& dofs = ref_->dofs();

  switch (family_.kind) {
    case FamilyKind::ContinuousLagrange: {
      const int r = family_.degree;
      const int per_edge = r - 1;
      const int per_cell = (r - 1) * (r - 2) / 2;
      nscalar_global = nv + nf * per_edge + nc * per_cell;
      for (int c = 0; c < nc; ++c) {
        const auto& cv = m.cell(c);
        for (int i = 0; i < nscalar; ++i) {
          const DofInfo& d = dofs[i];
          int g = -1;
          if (d.entity == DofEntity::Vertex) {
            g = cv[d.entity_index];
          } else if (d.entity == DofEntity::Edge) {
            const int f = m.cell_facet(c, d.entity_index);
            const auto lv = local_edge_vertices(d.entity_index);
            const bool same = cv[lv[0]] < cv[lv[1]];
            const int k = same ? d.index : per_edge - 1 - d.index;
            g = nv + f * per_edge + k;
          } else {
            g = nv + nf * per_edge + c * per_cell + d.index;
          }
          scalar_dofs[c * nscalar + i] = g;
        }
      }
      break;
    }
    case FamilyKind::DiscontinuousLagrange:
      nscalar_global = nc * nscalar;
      for (int c = 0; c < nc; ++c)
        for (int i = 0; i < nscalar; ++i) scalar_dofs[c * nscalar + i] = c * nscalar + i;
      break;
    case FamilyKind::CrouzeixRaviart:
      nscalar_global = nf;
      for (int c = 0; c < nc; ++c)
        for (int i = 0; i < nscalar; ++i) scalar_dofs[c * nscalar + i] = m.cell_facet(c, dofs[i].entity_index);
      break;
    case FamilyKind::BDM: {
      const int per_edge = family_.degree + 1;
      const int per_cell = nscalar - 3 * per_edge;
      nscalar_global = nf * per_edge + nc * per_cell;
      for (int c = 0; c < nc; ++c) {
        const auto& cv = m.cell(c);
        for (int i = 0; i < nscalar; ++i) {
          const DofInfo& d = dofs[i];
          if (d.entity == DofEntity::Edge) {
            const int f = m.cell_facet(c, d.entity_index);
            const Facet& fa = m.facet(f);
            const double sn = fa.cells[0] == c ? 1.0 : -1.0;
            const auto lv = local_edge_vertices(d.entity_index);
            const double sdir = cv[lv[0]] < cv[lv[1]] ? 1.0 : -1.0;
            scalar_dofs[c * nscalar + i] = f * per_edge + d.index;
            scalar_signs[c * nscalar + i] = sn * ((d.index % 2 == 1) ? sdir : 1.0);
          } else {
            scalar_dofs[c * nscalar + i] = nf * per_edge + c * per_cell + d.index;
          }
        }
      }
      break;
    }
  }

  dim_ = nscalar_global * vs;
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < nscalar; ++i)
      for (int comp = 0; comp < vs; ++comp) {
        cell_dofs_[c * ndofs_cell_ + vs * i + comp] = vs * scalar_dofs[c * nscalar + i] + comp;
        cell_signs_[c * ndofs_cell_ + vs * i + comp] = scalar_signs[c * nscalar + i];
      }

  if (family_.kind != FamilyKind::BDM) {
    dof_points_.assign(dim_, Point2::Zero());
    for (int c = 0; c < nc; ++c) {
      const CellMap map = CellMap::of_cell(m, c);
      for (int i = 0; i < nscalar; ++i) {
        const Point2 x = map.to_physical(ref_->nodes()[i]);
        for (int comp = 0; comp < vs; ++comp) dof_points_[cell_dofs_[c * ndofs_cell_ + vs * i + comp]] = x;
      }
    }
  }
  constrained_mask_.assign(dim_, 0);
}

CellBasis Space::tabulate(int c, std::span<const Point2> ref_points) const {
  const Mesh& m = *mesh_;
  const CellMap map = CellMap::of_cell(m, c);
  const auto signs = cell_signs(c);
  CellBasis out;
  out.value_size = family_.value_size;
  const int nq = static_cast<int>(ref_points.size());
  out.values.resize(nq);
  out.gradients.resize(nq);
  if (family_.value_size == 2) out.divergence.resize(nq);

  for (int q = 0; q < nq; ++q) {
    const BasisPointValues ref = ref_->eval_basis_unchecked(ref_points[q]);
    const int nb = ref_->num_basis();
    if (family_.kind == FamilyKind::BDM) {
      Eigen::MatrixXd& V = out.values[q];
      Eigen::MatrixXd& G = out.gradients[q];
      Eigen::VectorXd& D = out.divergence[q];
      V.resize(nb, 2);
      G.resize(nb, 4);
      D.resize(nb);
      for (int i = 0; i < nb; ++i) {
        Eigen::Matrix2d rg;
        rg << ref.gradients(i, 0), ref.gradients(i, 1), ref.gradients(i, 2), ref.gradients(i, 3);
        const PiolaValues pv = piola_map(map, ref.values.row(i).transpose(), rg);
        const double s = signs[i];
        V.row(i) = s * pv.value.transpose();
        G(i, 0) = s * pv.gradient(0, 0);
        G(i, 1) = s * pv.gradient(0, 1);
        G(i, 2) = s * pv.gradient(1, 0);
        G(i, 3) = s * pv.gradient(1, 1);
        D[i] = s * pv.divergence;
      }
      continue;
    }
    // Scalar factor: affine pull-back.
    const Eigen::MatrixXd sg = ref.gradients * map.Binv;
    if (family_.value_size == 1) {
      out.values[q] = ref.values;
      out.gradients[q] = sg;
      continue;
    }
    Eigen::MatrixXd& V = out.values[q];
    Eigen::MatrixXd& G = out.gradients[q];
    Eigen::VectorXd& D = out.divergence[q];
    V.setZero(2 * nb, 2);
    G.setZero(2 * nb, 4);
    D.resize(2 * nb);
    for (int i = 0; i < nb; ++i) {
      V(2 * i, 0) = ref.values(i, 0);
      V(2 * i + 1, 1) = ref.values(i, 0);
      G(2 * i, 0) = sg(i, 0);
      G(2 * i, 1) = sg(i, 1);
      G(2 * i + 1, 2) = sg(i, 0);
      G(2 * i + 1, 3) = sg(i, 1);
      D[2 * i] = sg(i, 0);
      D[2 * i + 1] = sg(i, 1);
    }
  }
  return out;
}

std::vector<int> Space::facet_dofs(int f) const {
  const Mesh& m = *mesh_;
  const Facet& fa = m.facet(f);
  const int c = fa.cells[0];
  const int le = fa.local_index[0];
  const auto lv = local_edge_vertices(le);
  const auto& dofs = ref_->dofs();
  const bool componentwise = family_.kind != FamilyKind::BDM && family_.value_size == 2;
  const int vs = componentwise ? 2 : 1;
  const auto cd = cell_dofs(c);
  std::vector<int> out;
  if (family_.kind == FamilyKind::DiscontinuousLagrange) return out;
  for (int i = 0; i < ref_->num_basis(); ++i) {
    const DofInfo& d = dofs[i];
    const bool on_facet = (d.entity == DofEntity::Edge && d.entity_index == le) ||
                          (d.entity == DofEntity::Vertex && (d.entity_index == lv[0] || d.entity_index == lv[1]));
    if (!on_facet) continue;
    for (int comp = 0; comp < vs; ++comp) out.push_back(cd[vs * i + comp]);
  }
  return out;
}

Point2 Space::dof_point(int dof) const {
  if (dof_points_.empty()) throw std::logic_error("dof_point requested for a moment-based space");
  return dof_points_.at(dof);
}

bool Space::constrain(int dof, double value) {
  if (dof < 0 || dof >= dim_) throw std::out_of_range("constraint dof out of range");
  if (constrained_mask_[dof]) return false;
  constrained_mask_[dof] = 1;
  constraints_[dof] = value;
  return true;
}

FacetQuadrature facet_quadrature(const Mesh& mesh, int f, int degree) {
  const QuadratureRule rule = quadrature_rule(RefDomain::Interval, degree);
  const Facet& fa = mesh.facet(f);
  const Point2& a = mesh.vertex(fa.vertices[0]);
  const Point2& b = mesh.vertex(fa.vertices[1]);
  const double len = (b - a).norm();
  FacetQuadrature fq;
  for (int q = 0; q < rule.size(); ++q) {
    const double t = rule.points(q, 0);
    fq.points.push_back(a + t * (b - a));
    fq.params.push_back(t);
    fq.weights.push_back(rule.weights[q] * len);
  }
  return fq;
}

std::vector<Point2> to_reference_points(const Mesh& mesh, int c, std::span<const Point2> physical) {
  const CellMap map = CellMap::of_cell(mesh, c);
  std::vector<Point2> out;
  out.reserve(physical.size());
  for (const auto& x : physical) out.push_back(map.to_reference(x));
  return out;
}

std::vector<Point2> rule_points(const QuadratureRule& rule) {
  std::vector<Point2> pts;
  pts.reserve(rule.size());
  for (int q = 0; q < rule.size(); ++q) pts.emplace_back(rule.points(q, 0), rule.points(q, 1));
  return pts;
}

Eigen::VectorXd gather(const Space& space, int c, const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  const auto cd = space.cell_dofs(c);
  Eigen::VectorXd local(cd.size());
  for (std::size_t i = 0; i < cd.size(); ++i) local[i] = coeffs[cd[i]];
  return local;
}

namespace {

// Moments of g.n_e against the edge Legendre basis, in the global facet frame.
std::vector<double> normal_moments(const Mesh& mesh, int f, int degree, const VectorFn& g) {
  const FacetGeometry geo = facet_geometry(mesh, f);
  const FacetQuadrature fq = facet_quadrature(mesh, f, 2 * degree + 8);
  std::vector<double> mom(degree + 1, 0.0);
  for (std::size_t q = 0; q < fq.points.size(); ++q) {
    const double gn = eval_checked(g, fq.points[q]).dot(geo.normal);
    for (int j = 0; j <= degree; ++j) mom[j] += fq.weights[q] * gn * shifted_legendre(j, fq.params[q]);
  }
  return mom;
}

}  // namespace

Space build_space(std::shared_ptr<const Mesh> mesh, ElementFamily family,
                  const std::vector<EssentialCondition>& conditions) {
  Space space(mesh, family);
  const Mesh& m = *mesh;
  for (const auto& cond : conditions) {
    std::vector<int> facets;
    for (auto t : cond.tags) {
      const auto ft = m.facets_with_tag(t);
      if (ft.empty())
        throw ConfigurationError("essential condition on tag '" + std::string(to_string(t)) +
                                 "' which has no facets");
      facets.insert(facets.end(), ft.begin(), ft.end());
    }
    const bool vector_space = family.value_size == 2;
    if (vector_space && !cond.vector_data)
      throw ConfigurationError("vector essential condition without vector data");
    if (!vector_space && !cond.scalar_data)
      throw ConfigurationError("scalar essential condition without scalar data");

    if (family.kind == FamilyKind::BDM) {
      if (cond.component == ConstraintComponent::Tangential)
        throw ConfigurationError("BDM spaces carry only normal-trace constraints");
      const int per_edge = family.degree + 1;
      for (int f : facets) {
        const auto mom = normal_moments(m, f, family.degree, cond.vector_data);
        for (int j = 0; j < per_edge; ++j) space.constrain(f * per_edge + j, mom[j]);
      }
      continue;
    }
    if (family.kind == FamilyKind::DiscontinuousLagrange)
      throw ConfigurationError("discontinuous spaces cannot carry essential conditions");

    for (int f : facets) {
      const auto fd = space.facet_dofs(f);
      const FacetGeometry geo = facet_geometry(m, f);
      if (!vector_space) {
        for (int d : fd) space.constrain(d, eval_checked(cond.scalar_data, space.dof_point(d)));
        continue;
      }
      int tangential_comp = -1, normal_comp = -1;
      if (cond.component != ConstraintComponent::Full) {
        if (std::abs(std::abs(geo.normal.x()) - 1.0) < 1e-12) {
          normal_comp = 0;
          tangential_comp = 1;
        } else if (std::abs(std::abs(geo.normal.y()) - 1.0) < 1e-12) {
          normal_comp = 1;
          tangential_comp = 0;
        } else {
          throw ConfigurationError("componentwise normal/tangential constraints need axis-aligned facets");
        }
      }
      for (int d : fd) {
        const int comp = d % 2;
        if (cond.component == ConstraintComponent::Tangential && comp != tangential_comp) continue;
        if (cond.component == ConstraintComponent::Normal && comp != normal_comp) continue;
        space.constrain(d, eval_checked(cond.vector_data, space.dof_point(d))[comp]);
      }
    }
  }
  return space;
}

MultiplierSpace::MultiplierSpace(std::shared_ptr<const Mesh> mesh, int degree, bool allow_empty)
    : mesh_(std::move(mesh)), degree_(degree) {
  if (degree < 0 || degree > 1) throw ConfigurationError("multiplier degree must be 0 or 1");
  facets_ = membrane_facet_mesh(*mesh_, !allow_empty);
  for (std::size_t i = 0; i < facets_.size(); ++i) position_[facets_[i]] = static_cast<int>(i);
}

int MultiplierSpace::position(int facet) const {
  auto it = position_.find(facet);
  return it == position_.end() ? -1 : it->second;
}

Eigen::VectorXd MultiplierSpace::eval(double t) const {
  if (degree_ == 0) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd v(2);
  v << 1.0 - t, t;
  return v;
}

SystemLayout build_system_layout(std::array<int, 4> dims) {
  SystemLayout layout;
  int off = 0;
  for (int b = 0; b < 4; ++b) {
    if (dims[b] < 0) throw ConfigurationError("negative block size");
    layout.offsets[b] = off;
    layout.sizes[b] = dims[b];
    off += dims[b];
  }
  layout.total_dim = off;
  return layout;
}

SystemLayout build_system_layout(const Space& velocity, const Space& pressure,
                                 const MultiplierSpace& multiplier, const Space& concentration) {
  const Mesh* m = &velocity.mesh();
  if (&pressure.mesh() != m || &multiplier.mesh() != m || &concentration.mesh() != m)
    throw ConfigurationError("spaces are defined on different meshes");
  return build_system_layout({velocity.dim(), pressure.dim(), multiplier.dim(), concentration.dim()});
}

Eigen::VectorXd interpolate(const Space& space, const VectorFn& field) {
  const ElementFamily& fam = space.family();
  if (fam.value_size != 2) throw std::invalid_argument("vector field interpolated into a scalar space");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.dim());
  const Mesh& m = space.mesh();
  if (fam.kind != FamilyKind::BDM) {
    for (int d = 0; d < space.dim(); ++d) out[d] = eval_checked(field, space.dof_point(d))[d % 2];
    return out;
  }
  const int per_edge = fam.degree + 1;
  for (int f = 0; f < m.num_facets(); ++f) {
    const auto mom = normal_moments(m, f, fam.degree, field);
    for (int j = 0; j < per_edge; ++j) out[f * per_edge + j] = mom[j];
  }
  // Interior moments against (1,0), (0,1), (-y,x) on the reference cell of
  // the Piola pull-back detB * B^-1 v.
  const auto& dofs = space.reference().dofs();
  const QuadratureRule tri = quadrature_rule(RefDomain::Triangle, 2 * fam.degree + 8);
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellMap map = CellMap::of_cell(m, c);
    const auto cd = space.cell_dofs(c);
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      if (dofs[i].entity != DofEntity::Interior) continue;
      double acc = 0.0;
      for (int q = 0; q < tri.size(); ++q) {
        const Point2 p(tri.points(q, 0), tri.points(q, 1));
        const Vector2 vhat = map.detB * map.Binv * eval_checked(field, map.to_physical(p));
        Vector2 test;
        if (dofs[i].index == 0) test = {1.0, 0.0};
        else if (dofs[i].index == 1) test = {0.0, 1.0};
        else test = {-p.y(), p.x()};
        acc += tri.weights[q] * vhat.dot(test);
      }
      out[cd[i]] = acc;
    }
  }
  return out;
}

Eigen::VectorXd interpolate(const Space& space, const ScalarFn& field) {
  if (space.family().value_size != 1) throw std::invalid_argument("scalar field interpolated into a vector space");
  Eigen::VectorXd out(space.dim());
  for (int d = 0; d < space.dim(); ++d) out[d] = eval_checked(field, space.dof_point(d));
  return out;
}

}  // namespace memflow
