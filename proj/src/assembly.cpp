#include "memflow/assembly.hpp"

#include <algorithm>
#include <cmath>

namespace memflow {

namespace {

// Basis of one cell evaluated at the shared physical points of a facet.
struct FacetSide {
  int cell = -1;
  std::span<const int> dofs;
  CellBasis basis;
};

FacetSide facet_side(const Space& space, int f, int side, const FacetQuadrature& fq) {
  const Mesh& m = space.mesh();
  FacetSide s;
  s.cell = m.facet(f).cells[side];
  s.dofs = space.cell_dofs(s.cell);
  const auto ref = to_reference_points(m, s.cell, fq.points);
  s.basis = space.tabulate(s.cell, ref);
  return s;
}

void scatter(std::vector<Triplet>& t, std::span<const int> rows, std::span<const int> cols,
             const Eigen::MatrixXd& local) {
  for (int i = 0; i < local.rows(); ++i)
    for (int j = 0; j < local.cols(); ++j)
      if (local(i, j) != 0.0) t.emplace_back(rows[i], cols[j], local(i, j));
}

void scatter(Eigen::VectorXd& out, std::span<const int> rows, const Eigen::VectorXd& local) {
  for (int i = 0; i < local.size(); ++i) out[rows[i]] += local[i];
}

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

std::vector<int> concat(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Rows: basis functions; columns: (grad phi_i) n for a vector basis.
Eigen::MatrixXd normal_flux(const CellBasis& b, int q, const Vector2& n) {
  const Eigen::MatrixXd& G = b.gradients[q];
  Eigen::MatrixXd out(G.rows(), 2);
  out.col(0) = G.col(0) * n.x() + G.col(1) * n.y();
  out.col(1) = G.col(2) * n.x() + G.col(3) * n.y();
  return out;
}

// Vector basis gradient of function i as a 2x2 matrix.
Matrix2 grad_of(const Eigen::MatrixXd& G, int i) {
  Matrix2 g;
  g << G(i, 0), G(i, 1), G(i, 2), G(i, 3);
  return g;
}

Matrix2 to_matrix2(const Eigen::MatrixXd& g) {
  Matrix2 out;
  out << g(0, 0), g(0, 1), g(1, 0), g(1, 1);
  return out;
}

bool has_facet_terms(const Space& v) { return v.family().kind != FamilyKind::ContinuousLagrange; }

double upwind_weight(double wn) {
  // d min(s, 0)/ds with the symmetric choice at s = 0.
  if (wn < 0.0) return 1.0;
  if (wn > 0.0) return 0.0;
  return 0.5;
}

}  // namespace

int default_quadrature_degree(int max_space_degree) { return 2 * (max_space_degree + 1) + 1; }

int default_quadrature_degree(const Discretization& disc) {
  const int r = std::max({disc.velocity->family().degree, disc.pressure->family().degree,
                          disc.concentration->family().degree});
  return default_quadrature_degree(r);
}

Matrix2 nitsche_projector(NitscheMode mode, const Vector2& n) {
  switch (mode) {
    case NitscheMode::None: return Matrix2::Zero();
    case NitscheMode::Full: return Matrix2::Identity();
    case NitscheMode::Normal: return n * n.transpose();
    case NitscheMode::Tangential: {
      const Vector2 t(-n.y(), n.x());
      return t * t.transpose();
    }
  }
  return Matrix2::Zero();
}

SparseMatrix assemble_a_h(const Space& V, const ViscousForm& form) {
  if (form.interior_penalty && !(form.alpha0 > 0.0)) throw ConfigurationError("alpha0 must be positive");
  const Mesh& m = V.mesh();
  const QuadratureRule rule = quadrature_rule(RefDomain::Triangle, form.quadrature);
  const auto pts = rule_points(rule);
  std::vector<Triplet> t;
  const int nd = V.dofs_per_cell();

  for (int c = 0; c < m.num_cells(); ++c) {
    const CellBasis b = V.tabulate(c, pts);
    const double jac = 2.0 * m.cell_area(c);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nd, nd);
    for (int q = 0; q < rule.size(); ++q)
      local.noalias() += (form.mu * rule.weights[q] * jac) * b.gradients[q] * b.gradients[q].transpose();
    scatter(t, V.cell_dofs(c), V.cell_dofs(c), local);
  }
  if (!form.interior_penalty) return from_triplets(V.dim(), V.dim(), t);

  for (int f = 0; f < m.num_facets(); ++f) {
    const Facet& fa = m.facet(f);
    const FacetGeometry geo = facet_geometry(m, f);
    const FacetQuadrature fq = facet_quadrature(m, f, form.quadrature);
    const double pen = form.alpha0 * form.mu / geo.length;
    if (!fa.is_boundary()) {
      const FacetSide s0 = facet_side(V, f, 0, fq), s1 = facet_side(V, f, 1, fq);
      const auto dofs = concat(s0.dofs, s1.dofs);
      Eigen::MatrixXd local = Eigen::MatrixXd::Zero(2 * nd, 2 * nd);
      Eigen::MatrixXd J(2 * nd, 2), A(2 * nd, 2);
      for (std::size_t q = 0; q < fq.points.size(); ++q) {
        J.topRows(nd) = s0.basis.values[q];
        J.bottomRows(nd) = -s1.basis.values[q];
        A.topRows(nd) = 0.5 * form.mu * normal_flux(s0.basis, static_cast<int>(q), geo.normal);
        A.bottomRows(nd) = 0.5 * form.mu * normal_flux(s1.basis, static_cast<int>(q), geo.normal);
        const double w = fq.weights[q];
        local.noalias() += w * (-J * A.transpose() - A * J.transpose() + pen * J * J.transpose());
      }
      scatter(t, dofs, dofs, local);
      continue;
    }
    auto it = form.modes.find(*m.tag(f));
    const NitscheMode mode = it == form.modes.end() ? NitscheMode::None : it->second;
    if (mode == NitscheMode::None) continue;
    const Matrix2 P = nitsche_projector(mode, geo.normal);
    const FacetSide s0 = facet_side(V, f, 0, fq);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nd, nd);
    for (std::size_t q = 0; q < fq.points.size(); ++q) {
      const Eigen::MatrixXd J = s0.basis.values[q] * P;
      const Eigen::MatrixXd A = form.mu * normal_flux(s0.basis, static_cast<int>(q), geo.normal);
      local.noalias() += fq.weights[q] * (-J * A.transpose() - A * J.transpose() + pen * J * J.transpose());
    }
    scatter(t, s0.dofs, s0.dofs, local);
  }
  return from_triplets(V.dim(), V.dim(), t);
}

Eigen::VectorXd assemble_a_h_rhs(const Space& V, const ViscousForm& form, const VectorFn& g) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(V.dim());
  if (!form.interior_penalty) return out;
  const Mesh& m = V.mesh();
  for (int f : m.boundary_facets()) {
    auto it = form.modes.find(*m.tag(f));
    const NitscheMode mode = it == form.modes.end() ? NitscheMode::None : it->second;
    if (mode == NitscheMode::None) continue;
    const FacetGeometry geo = facet_geometry(m, f);
    const FacetQuadrature fq = facet_quadrature(m, f, form.quadrature);
    const Matrix2 P = nitsche_projector(mode, geo.normal);
    const double pen = form.alpha0 * form.mu / geo.length;
    const FacetSide s0 = facet_side(V, f, 0, fq);
    Eigen::VectorXd local = Eigen::VectorXd::Zero(V.dofs_per_cell());
    for (std::size_t q = 0; q < fq.points.size(); ++q) {
      const Vector2 pg = P * g(fq.points[q]);
      const Eigen::MatrixXd J = s0.basis.values[q] * P;
      const Eigen::MatrixXd A = form.mu * normal_flux(s0.basis, static_cast<int>(q), geo.normal);
      local += fq.weights[q] * (-A * pg + pen * J * pg);
    }
    scatter(out, s0.dofs, local);
  }
  return out;
}

ConvectionBlocks assemble_upwind_convection(const Space& V, const Eigen::VectorXd& w, const Eigen::VectorXd& u,
                                            double rho, int quadrature) {
  const Mesh& m = V.mesh();
  const QuadratureRule rule = quadrature_rule(RefDomain::Triangle, quadrature);
  const auto pts = rule_points(rule);
  const int nd = V.dofs_per_cell();
  std::vector<Triplet> top, tdw;

  for (int c = 0; c < m.num_cells(); ++c) {
    const CellBasis b = V.tabulate(c, pts);
    const Eigen::VectorXd wl = gather(V, c, w), ul = gather(V, c, u);
    const double jac = 2.0 * m.cell_area(c);
    Eigen::MatrixXd lop = Eigen::MatrixXd::Zero(nd, nd), ldw = Eigen::MatrixXd::Zero(nd, nd);
    for (int q = 0; q < rule.size(); ++q) {
      const double wq = rho * rule.weights[q] * jac;
      const Vector2 wv = field_value(b, q, wl);
      const Matrix2 gu = to_matrix2(field_gradient(b, q, ul));
      const Eigen::MatrixXd& Vq = b.values[q];
      // Trial j: (grad phi_j) w; derivative column j: (grad u) phi_j.
      Eigen::MatrixXd conv(nd, 2);
      for (int j = 0; j < nd; ++j) conv.row(j) = (grad_of(b.gradients[q], j) * wv).transpose();
      lop.noalias() += wq * Vq * conv.transpose();
      ldw.noalias() += wq * Vq * (Vq * gu.transpose()).transpose();
    }
    scatter(top, V.cell_dofs(c), V.cell_dofs(c), lop);
    scatter(tdw, V.cell_dofs(c), V.cell_dofs(c), ldw);
  }

  if (has_facet_terms(V)) {
    for (int f : m.interior_facets()) {
      const FacetGeometry geo = facet_geometry(m, f);
      const FacetQuadrature fq = facet_quadrature(m, f, quadrature);
      const FacetSide s0 = facet_side(V, f, 0, fq), s1 = facet_side(V, f, 1, fq);
      const auto dofs = concat(s0.dofs, s1.dofs);
      const Eigen::VectorXd w0 = gather(V, s0.cell, w), w1 = gather(V, s1.cell, w);
      const Eigen::VectorXd u0 = gather(V, s0.cell, u), u1 = gather(V, s1.cell, u);
      Eigen::MatrixXd lop = Eigen::MatrixXd::Zero(2 * nd, 2 * nd), ldw = Eigen::MatrixXd::Zero(2 * nd, 2 * nd);
      for (std::size_t qi = 0; qi < fq.points.size(); ++qi) {
        const int q = static_cast<int>(qi);
        const double wn =
            0.5 * (field_value(s0.basis, q, w0) + field_value(s1.basis, q, w1)).dot(geo.normal);
        const double m0 = std::min(wn, 0.0), m1 = std::min(-wn, 0.0);
        const Eigen::MatrixXd& V0 = s0.basis.values[q];
        const Eigen::MatrixXd& V1 = s1.basis.values[q];
        // Jump from side s: (u_other - u_s), as rows over the stacked dofs.
        Eigen::MatrixXd D0(2 * nd, 2), D1(2 * nd, 2);
        D0.topRows(nd) = -V0;
        D0.bottomRows(nd) = V1;
        D1 = -D0;
        Eigen::MatrixXd T0 = Eigen::MatrixXd::Zero(2 * nd, 2), T1 = Eigen::MatrixXd::Zero(2 * nd, 2);
        T0.topRows(nd) = V0;
        T1.bottomRows(nd) = V1;
        const double wt = rho * fq.weights[qi];
        lop.noalias() += wt * (m0 * T0 * D0.transpose() + m1 * T1 * D1.transpose());
        // d(wn)/d(w dofs) = 0.5 phi.n over the stacked dofs.
        Eigen::VectorXd dwn(2 * nd);
        dwn.head(nd) = 0.5 * V0 * geo.normal;
        dwn.tail(nd) = 0.5 * V1 * geo.normal;
        const Vector2 jump01 = field_value(s1.basis, q, u1) - field_value(s0.basis, q, u0);
        const double d0 = upwind_weight(wn), d1 = -upwind_weight(-wn);
        ldw.noalias() += wt * (d0 * (T0 * jump01) - d1 * (T1 * jump01)) * dwn.transpose();
      }
      scatter(top, dofs, dofs, lop);
      scatter(tdw, dofs, dofs, ldw);
    }
  }
  return {from_triplets(V.dim(), V.dim(), top), from_triplets(V.dim(), V.dim(), tdw)};
}

CouplingBlocks assemble_b(const Space& V, const Space& Q, const MultiplierSpace& L, int quadrature) {
  const Mesh& m = V.mesh();
  const QuadratureRule rule = quadrature_rule(RefDomain::Triangle, quadrature);
  const auto pts = rule_points(rule);
  std::vector<Triplet> t1, t2;
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellBasis bv = V.tabulate(c, pts);
    const CellBasis bq = Q.tabulate(c, pts);
    const double jac = 2.0 * m.cell_area(c);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(Q.dofs_per_cell(), V.dofs_per_cell());
    for (int q = 0; q < rule.size(); ++q)
      local.noalias() -= (rule.weights[q] * jac) * bq.values[q].col(0) * bv.divergence[q].transpose();
    scatter(t1, Q.cell_dofs(c), V.cell_dofs(c), local);
  }
  const int nl = L.dofs_per_facet();
  for (std::size_t pos = 0; pos < L.facets().size(); ++pos) {
    const int f = L.facets()[pos];
    const FacetGeometry geo = facet_geometry(m, f);
    const FacetQuadrature fq = facet_quadrature(m, f, quadrature);
    const FacetSide s0 = facet_side(V, f, 0, fq);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nl, V.dofs_per_cell());
    for (std::size_t q = 0; q < fq.points.size(); ++q)
      local.noalias() += fq.weights[q] * L.eval(fq.params[q]) * (s0.basis.values[q] * geo.normal).transpose();
    std::vector<int> rows(nl);
    for (int i = 0; i < nl; ++i) rows[i] = L.dof(static_cast<int>(pos), i);
    scatter(t2, rows, s0.dofs, local);
  }
  return {from_triplets(Q.dim(), V.dim(), t1), from_triplets(L.dim(), V.dim(), t2)};
}

SparseMatrix assemble_c(const Space& Z, double D, int quadrature) {
  const Mesh& m = Z.mesh();
  const QuadratureRule rule = quadrature_rule(RefDomain::Triangle, quadrature);
  const auto pts = rule_points(rule);
  std::vector<Triplet> t;
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellBasis b = Z.tabulate(c, pts);
    const double jac = 2.0 * m.cell_area(c);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(Z.dofs_per_cell(), Z.dofs_per_cell());
    for (int q = 0; q < rule.size(); ++q)
      local.noalias() += (D * rule.weights[q] * jac) * b.gradients[q] * b.gradients[q].transpose();
    scatter(t, Z.cell_dofs(c), Z.cell_dofs(c), local);
  }
  return from_triplets(Z.dim(), Z.dim(), t);
}

ConvectionBlocks assemble_c_tilde(const Space& Z, const Space& V, const Eigen::VectorXd& w,
                                  const Eigen::VectorXd& theta, int quadrature) {
  const Mesh& m = Z.mesh();
  const QuadratureRule rule = quadrature_rule(RefDomain::Triangle, quadrature);
  const auto pts = rule_points(rule);
  const int nz = Z.dofs_per_cell(), nv = V.dofs_per_cell();
  std::vector<Triplet> top, tdw;
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellBasis bz = Z.tabulate(c, pts);
    const CellBasis bv = V.tabulate(c, pts);
    const Eigen::VectorXd wl = gather(V, c, w), tl = gather(Z, c, theta);
    const double jac = 2.0 * m.cell_area(c);
    Eigen::MatrixXd lop = Eigen::MatrixXd::Zero(nz, nz), ldw = Eigen::MatrixXd::Zero(nz, nv);
    for (int q = 0; q < rule.size(); ++q) {
      const double wq = rule.weights[q] * jac;
      const Vector2 wv = field_value(bv, q, wl);
      const double th = field_value(bz, q, tl)[0];
      const Eigen::VectorXd wgrad = bz.gradients[q] * wv;  // w.grad tau_i
      lop.noalias() -= wq * wgrad * bz.values[q].col(0).transpose();
      ldw.noalias() -= (wq * th) * bz.gradients[q] * bv.values[q].transpose();
    }
    scatter(top, Z.cell_dofs(c), Z.cell_dofs(c), lop);
    scatter(tdw, Z.cell_dofs(c), V.cell_dofs(c), ldw);
  }
  for (int f : m.facets_with_tag(BoundaryTag::Outlet)) {
    const FacetGeometry geo = facet_geometry(m, f);
    const FacetQuadrature fq = facet_quadrature(m, f, quadrature);
    const FacetSide sz = facet_side(Z, f, 0, fq), sv = facet_side(V, f, 0, fq);
    const Eigen::VectorXd wl = gather(V, sz.cell, w), tl = gather(Z, sz.cell, theta);
    Eigen::MatrixXd lop = Eigen::MatrixXd::Zero(nz, nz), ldw = Eigen::MatrixXd::Zero(nz, nv);
    for (std::size_t qi = 0; qi < fq.points.size(); ++qi) {
      const int q = static_cast<int>(qi);
      const double wn = field_value(sv.basis, q, wl).dot(geo.normal);
      const double th = field_value(sz.basis, q, tl)[0];
      const Eigen::VectorXd& phi = sz.basis.values[q].col(0);
      lop.noalias() += (fq.weights[qi] * wn) * phi * phi.transpose();
      ldw.noalias() += (fq.weights[qi] * th) * phi * (sv.basis.values[q] * geo.normal).transpose();
    }
    scatter(top, sz.dofs, sz.dofs, lop);
    scatter(tdw, sz.dofs, sv.dofs, ldw);
  }
  return {from_triplets(Z.dim(), Z.dim(), top), from_triplets(Z.dim(), V.dim(), tdw)};
}

MembraneCoupling assemble_membrane_coupling(const MultiplierSpace& L, const Space& Z, const MembraneLaw& law,
                                            const Eigen::VectorXd& theta, int quadrature) {
  const Mesh& m = Z.mesh();
  MembraneCoupling out;
  out.rhs = Eigen::VectorXd::Zero(L.dim());
  std::vector<Triplet> t;
  const int nl = L.dofs_per_facet();
  bool warned = false;
  for (std::size_t pos = 0; pos < L.facets().size(); ++pos) {
    const int f = L.facets()[pos];
    const FacetQuadrature fq = facet_quadrature(m, f, quadrature);
    const FacetSide s0 = facet_side(Z, f, 0, fq);
    const Eigen::VectorXd tl = gather(Z, s0.cell, theta);
    Eigen::VectorXd lr = Eigen::VectorXd::Zero(nl);
    Eigen::MatrixXd lj = Eigen::MatrixXd::Zero(nl, Z.dofs_per_cell());
    for (std::size_t qi = 0; qi < fq.points.size(); ++qi) {
      const int q = static_cast<int>(qi);
      const Eigen::VectorXd xi = L.eval(fq.params[qi]);
      const double th = field_value(s0.basis, q, tl)[0];
      const double g = law.eval(fq.points[qi], th);
      if (!warned && law.g2 > law.g1 && (g <= law.g1 || g > law.g2)) warned = true;
      lr += fq.weights[qi] * g * xi;
      lj.noalias() -= (fq.weights[qi] * law.g_b) * xi * s0.basis.values[q].col(0).transpose();
    }
    std::vector<int> rows(nl);
    for (int i = 0; i < nl; ++i) rows[i] = L.dof(static_cast<int>(pos), i);
    scatter(out.rhs, rows, lr);
    scatter(t, rows, s0.dofs, lj);
  }
  out.jacobian = from_triplets(L.dim(), Z.dim(), t);
  return out;
}

Eigen::VectorXd assemble_source(const Space& space, const VectorFn& f, int quadrature) {
  if (space.value_size() != 2) throw std::invalid_argument("vector source on a scalar space");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.dim());
  if (!f) return out;
  const Mesh& m = space.mesh();
  const QuadratureRule rule = quadrature_rule(RefDomain::Triangle, quadrature);
  const auto pts = rule_points(rule);
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellBasis b = space.tabulate(c, pts);
    const CellMap map = CellMap::of_cell(m, c);
    Eigen::VectorXd local = Eigen::VectorXd::Zero(space.dofs_per_cell());
    for (int q = 0; q < rule.size(); ++q)
      local += (rule.weights[q] * map.detB) * b.values[q] * f(map.to_physical(pts[q]));
    scatter(out, space.cell_dofs(c), local);
  }
  return out;
}

Eigen::VectorXd assemble_source(const Space& space, const ScalarFn& f, int quadrature) {
  if (space.value_size() != 1) throw std::invalid_argument("scalar source on a vector space");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.dim());
  if (!f) return out;
  const Mesh& m = space.mesh();
  const QuadratureRule rule = quadrature_rule(RefDomain::Triangle, quadrature);
  const auto pts = rule_points(rule);
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellBasis b = space.tabulate(c, pts);
    const CellMap map = CellMap::of_cell(m, c);
    Eigen::VectorXd local = Eigen::VectorXd::Zero(space.dofs_per_cell());
    for (int q = 0; q < rule.size(); ++q)
      local += (rule.weights[q] * map.detB * f(map.to_physical(pts[q]))) * b.values[q].col(0);
    scatter(out, space.cell_dofs(c), local);
  }
  return out;
}

Eigen::VectorXd assemble_boundary_traction(const Space& V, const std::vector<BoundaryTag>& tags,
                                           const TractionFn& traction, int quadrature) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(V.dim());
  if (!traction) return out;
  const Mesh& m = V.mesh();
  for (auto tag : tags)
    for (int f : m.facets_with_tag(tag)) {
      const FacetGeometry geo = facet_geometry(m, f);
      const FacetQuadrature fq = facet_quadrature(m, f, quadrature);
      const FacetSide s0 = facet_side(V, f, 0, fq);
      Eigen::VectorXd local = Eigen::VectorXd::Zero(V.dofs_per_cell());
      for (std::size_t q = 0; q < fq.points.size(); ++q)
        local += fq.weights[q] * s0.basis.values[q] * traction(fq.points[q], geo.normal);
      scatter(out, s0.dofs, local);
    }
  return out;
}

Eigen::VectorXd assemble_boundary_flux(const Space& Z, const std::vector<BoundaryTag>& tags, const FluxFn& flux,
                                       int quadrature) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Z.dim());
  if (!flux) return out;
  const Mesh& m = Z.mesh();
  for (auto tag : tags)
    for (int f : m.facets_with_tag(tag)) {
      const FacetGeometry geo = facet_geometry(m, f);
      const FacetQuadrature fq = facet_quadrature(m, f, quadrature);
      const FacetSide s0 = facet_side(Z, f, 0, fq);
      Eigen::VectorXd local = Eigen::VectorXd::Zero(Z.dofs_per_cell());
      for (std::size_t q = 0; q < fq.points.size(); ++q)
        local += (fq.weights[q] * flux(fq.points[q], geo.normal)) * s0.basis.values[q].col(0);
      scatter(out, s0.dofs, local);
    }
  return out;
}

SparseMatrix assemble_multiplier_stabilization(const Discretization& disc, int quadrature) {
  if (disc.problem.disc.scheme != Scheme::ConformingStabilized)
    throw ConfigurationError("multiplier stabilization applies to the conforming scheme only");
  const SystemLayout& lay = disc.layout;
  SparseMatrix out(lay.total_dim, lay.total_dim);
  const double alpha0 = disc.problem.disc.alpha0;
  if (alpha0 == 0.0) return out;
  const double delta = disc.problem.disc.delta;
  const double mu = disc.problem.physics.mu0;
  const Space& V = *disc.velocity;
  const Space& Q = *disc.pressure;
  const MultiplierSpace& L = *disc.multiplier;
  const Mesh& m = *disc.mesh;
  const int nv = V.dofs_per_cell(), np = Q.dofs_per_cell(), nl = L.dofs_per_facet();
  std::vector<Triplet> t;
  for (std::size_t pos = 0; pos < L.facets().size(); ++pos) {
    const int f = L.facets()[pos];
    const FacetGeometry geo = facet_geometry(m, f);
    const FacetQuadrature fq = facet_quadrature(m, f, quadrature);
    const FacetSide sv = facet_side(V, f, 0, fq), sp = facet_side(Q, f, 0, fq);
    std::vector<int> dofs;
    for (int d : sv.dofs) dofs.push_back(lay.offset(SystemLayout::U) + d);
    for (int d : sp.dofs) dofs.push_back(lay.offset(SystemLayout::P) + d);
    for (int i = 0; i < nl; ++i) dofs.push_back(lay.offset(SystemLayout::Lambda) + L.dof(static_cast<int>(pos), i));
    const int n = nv + np + nl;
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t qi = 0; qi < fq.points.size(); ++qi) {
      const int q = static_cast<int>(qi);
      const Eigen::VectorXd dudn = mu * normal_flux(sv.basis, q, geo.normal) * geo.normal;
      const Eigen::VectorXd& pq = sp.basis.values[q].col(0);
      const Eigen::VectorXd xi = L.eval(fq.params[qi]);
      Eigen::VectorXd sigma(n), test(n);
      sigma << dudn, -pq, xi;
      test << delta * dudn, -delta * pq, xi;
      local.noalias() += (-alpha0 * geo.length * fq.weights[qi]) * test * sigma.transpose();
    }
    scatter(t, dofs, dofs, local);
  }
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SystemOperator::SystemOperator(const Discretization& disc) : disc_(&disc), quad_(default_quadrature_degree(disc)) {
  const ProblemDefinition& pb = disc.problem;
  const SystemLayout& lay = disc.layout;
  const Space& V = *disc.velocity;
  const Space& Z = *disc.concentration;

  ViscousForm form;
  form.mu = pb.physics.mu0;
  form.alpha0 = pb.disc.alpha0;
  form.interior_penalty = disc.interior_penalty();
  form.modes = pb.nitsche;
  form.quadrature = quad_;

  const SparseMatrix A = assemble_a_h(V, form);
  const CouplingBlocks B = assemble_b(V, *disc.pressure, *disc.multiplier, quad_);
  const SparseMatrix B1t = B.b1.transpose(), B2t = B.b2.transpose();
  const SparseMatrix C = assemble_c(Z, pb.physics.D0, quad_);
  const MembraneCoupling G =
      assemble_membrane_coupling(*disc.multiplier, Z, pb.law, Eigen::VectorXd::Zero(Z.dim()), quad_);
  const SparseMatrix minusGj = -G.jacobian;

  std::vector<PositionedBlock> blocks = {
      {SystemLayout::U, SystemLayout::U, &A},          {SystemLayout::U, SystemLayout::P, &B1t},
      {SystemLayout::U, SystemLayout::Lambda, &B2t},   {SystemLayout::P, SystemLayout::U, &B.b1},
      {SystemLayout::Lambda, SystemLayout::U, &B.b2},  {SystemLayout::Lambda, SystemLayout::Theta, &minusGj},
      {SystemLayout::Theta, SystemLayout::Theta, &C}};
  linear_ = compose_monolithic(blocks, lay);
  if (pb.disc.scheme == Scheme::ConformingStabilized) linear_ += assemble_multiplier_stabilization(disc, quad_);

  load_ = Eigen::VectorXd::Zero(lay.total_dim);
  load_.segment(lay.offset(SystemLayout::U), lay.size(SystemLayout::U)) =
      assemble_a_h_rhs(V, form, pb.velocity_data) + assemble_source(V, pb.momentum_source, quad_) +
      assemble_boundary_traction(V, {BoundaryTag::Outlet}, pb.outlet_traction, quad_);
  load_.segment(lay.offset(SystemLayout::Lambda), lay.size(SystemLayout::Lambda)) = G.rhs;
  load_.segment(lay.offset(SystemLayout::Theta), lay.size(SystemLayout::Theta)) =
      assemble_source(Z, pb.theta_source, quad_) +
      assemble_boundary_flux(Z, {BoundaryTag::Outlet}, pb.theta_outlet_flux, quad_) -
      assemble_boundary_flux(Z, {BoundaryTag::Membrane, BoundaryTag::Wall}, pb.theta_closed_flux, quad_);
}

void SystemOperator::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* residual, SparseMatrix* jacobian) const {
  const Discretization& d = *disc_;
  const SystemLayout& lay = d.layout;
  if (x.size() != lay.total_dim) throw std::invalid_argument("state size does not match layout");
  const Eigen::VectorXd u = x.segment(lay.offset(SystemLayout::U), lay.size(SystemLayout::U));
  const Eigen::VectorXd th = x.segment(lay.offset(SystemLayout::Theta), lay.size(SystemLayout::Theta));

  ConvectionBlocks conv;
  const bool convect = d.problem.convection;
  if (convect) conv = assemble_upwind_convection(*d.velocity, u, u, d.problem.physics.rho0, quad_);
  const ConvectionBlocks tr = assemble_c_tilde(*d.concentration, *d.velocity, u, th, quad_);

  if (residual) {
    Eigen::VectorXd r = linear_ * x - load_;
    if (convect) r.segment(lay.offset(SystemLayout::U), lay.size(SystemLayout::U)) += conv.op * u;
    r.segment(lay.offset(SystemLayout::Theta), lay.size(SystemLayout::Theta)) += tr.op * th;
    *residual = std::move(r);
  }
  if (jacobian) {
    std::vector<Triplet> t;
    t.reserve(linear_.nonZeros() + tr.op.nonZeros() + tr.dw.nonZeros() +
              (convect ? conv.op.nonZeros() + conv.dw.nonZeros() : 0));
    append_triplets(linear_, 0, 0, t);
    if (convect) {
      append_triplets(conv.op, lay.offset(SystemLayout::U), lay.offset(SystemLayout::U), t);
      append_triplets(conv.dw, lay.offset(SystemLayout::U), lay.offset(SystemLayout::U), t);
    }
    append_triplets(tr.op, lay.offset(SystemLayout::Theta), lay.offset(SystemLayout::Theta), t);
    append_triplets(tr.dw, lay.offset(SystemLayout::Theta), lay.offset(SystemLayout::U), t);
    SparseMatrix j(lay.total_dim, lay.total_dim);
    j.setFromTriplets(t.begin(), t.end());
    *jacobian = std::move(j);
  }
}

Eigen::VectorXd SystemOperator::residual(const Eigen::VectorXd& x) const {
  Eigen::VectorXd r;
  evaluate(x, &r, nullptr);
  return r;
}

SparseMatrix SystemOperator::jacobian(const Eigen::VectorXd& x) const {
  SparseMatrix j;
  evaluate(x, nullptr, &j);
  return j;
}

}  // namespace memflow
