#include "memflow/norms.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "memflow/assembly.hpp"

namespace memflow {

namespace {

struct VolumeTerms {
  double value2 = 0.0;
  double grad2 = 0.0;
};

// Integrates |u_h - u|^2 and |grad(u_h - u)|^2 over the mesh. Empty exact
// functions count as zero.
VolumeTerms volume_terms(const Space& space, const Eigen::VectorXd& coeffs, const std::function<Eigen::VectorXd(const Point2&)>& exact,
                         const std::function<Eigen::MatrixXd(const Point2&)>& grad_exact, int quadrature) {
  const Mesh& m = space.mesh();
  const QuadratureRule rule = quadrature_rule(RefDomain::Triangle, quadrature);
  const auto pts = rule_points(rule);
  VolumeTerms out;
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellBasis b = space.tabulate(c, pts);
    const CellMap map = CellMap::of_cell(m, c);
    const Eigen::VectorXd loc = gather(space, c, coeffs);
    for (int q = 0; q < rule.size(); ++q) {
      const Point2 x = map.to_physical(pts[q]);
      Eigen::VectorXd v = field_value(b, q, loc);
      Eigen::MatrixXd g = field_gradient(b, q, loc);
      if (exact) v -= exact(x);
      if (grad_exact) g -= grad_exact(x);
      const double w = rule.weights[q] * map.detB;
      out.value2 += w * v.squaredNorm();
      out.grad2 += w * g.squaredNorm();
    }
  }
  return out;
}

double jump_terms(const Space& space, const Eigen::VectorXd& coeffs, const VectorFn& exact,
                  const std::map<BoundaryTag, NitscheMode>& boundary, int quadrature) {
  const Mesh& m = space.mesh();
  double sum = 0.0;
  for (int f = 0; f < m.num_facets(); ++f) {
    const Facet& fa = m.facet(f);
    Matrix2 P = Matrix2::Identity();
    if (fa.is_boundary()) {
      auto it = boundary.find(*m.tag(f));
      const NitscheMode mode = it == boundary.end() ? NitscheMode::None : it->second;
      if (mode == NitscheMode::None) continue;
      P = nitsche_projector(mode, facet_geometry(m, f).normal);
    }
    const FacetGeometry geo = facet_geometry(m, f);
    const FacetQuadrature fq = facet_quadrature(m, f, quadrature);
    std::array<Eigen::VectorXd, 2> loc;
    std::array<CellBasis, 2> basis;
    const int sides = fa.is_boundary() ? 1 : 2;
    for (int s = 0; s < sides; ++s) {
      loc[s] = gather(space, fa.cells[s], coeffs);
      basis[s] = space.tabulate(fa.cells[s], to_reference_points(m, fa.cells[s], fq.points));
    }
    double local = 0.0;
    for (std::size_t qi = 0; qi < fq.points.size(); ++qi) {
      const int q = static_cast<int>(qi);
      Vector2 jump = field_value(basis[0], q, loc[0]);
      if (sides == 2) {
        jump -= field_value(basis[1], q, loc[1]);
      } else if (exact) {
        jump -= exact(fq.points[qi]);
      }
      local += fq.weights[qi] * (P * jump).squaredNorm();
    }
    sum += local / geo.length;
  }
  return sum;
}

std::function<Eigen::VectorXd(const Point2&)> wrap(const VectorFn& f) {
  if (!f) return {};
  return [f](const Point2& x) -> Eigen::VectorXd { return f(x); };
}
std::function<Eigen::VectorXd(const Point2&)> wrap(const ScalarFn& f) {
  if (!f) return {};
  return [f](const Point2& x) -> Eigen::VectorXd { return Eigen::VectorXd::Constant(1, f(x)); };
}
std::function<Eigen::MatrixXd(const Point2&)> wrap_grad(const TensorFn& f) {
  if (!f) return {};
  return [f](const Point2& x) -> Eigen::MatrixXd { return f(x); };
}
std::function<Eigen::MatrixXd(const Point2&)> wrap_grad(const VectorFn& f) {
  if (!f) return {};
  return [f](const Point2& x) -> Eigen::MatrixXd { return f(x).transpose(); };
}

}  // namespace

double l2_norm(const Space& space, const Eigen::VectorXd& coeffs, int quadrature) {
  return std::sqrt(volume_terms(space, coeffs, {}, {}, quadrature).value2);
}

double broken_h1_norm(const Space& space, const Eigen::VectorXd& coeffs,
                      const std::map<BoundaryTag, NitscheMode>& boundary, int quadrature) {
  const VolumeTerms v = volume_terms(space, coeffs, {}, {}, quadrature);
  return std::sqrt(v.value2 + v.grad2 + jump_terms(space, coeffs, {}, boundary, quadrature));
}

double broken_h1_error(const Space& space, const Eigen::VectorXd& coeffs, const VectorFn& u,
                       const TensorFn& grad_u, const std::map<BoundaryTag, NitscheMode>& boundary, int quadrature) {
  const VolumeTerms v = volume_terms(space, coeffs, wrap(u), wrap_grad(grad_u), quadrature);
  return std::sqrt(v.value2 + v.grad2 + jump_terms(space, coeffs, u, boundary, quadrature));
}

double l2_error(const Space& space, const Eigen::VectorXd& coeffs, const ScalarFn& exact, int quadrature) {
  return std::sqrt(volume_terms(space, coeffs, wrap(exact), {}, quadrature).value2);
}

double h1_error(const Space& space, const Eigen::VectorXd& coeffs, const ScalarFn& exact, const VectorFn& grad_exact,
                int quadrature) {
  const VolumeTerms v = volume_terms(space, coeffs, wrap(exact), wrap_grad(grad_exact), quadrature);
  return std::sqrt(v.value2 + v.grad2);
}

double divergence_l2_norm(const Space& velocity, const Eigen::VectorXd& coeffs, int quadrature) {
  const Mesh& m = velocity.mesh();
  const QuadratureRule rule = quadrature_rule(RefDomain::Triangle, quadrature);
  const auto pts = rule_points(rule);
  double sum = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellBasis b = velocity.tabulate(c, pts);
    const Eigen::VectorXd loc = gather(velocity, c, coeffs);
    const double jac = 2.0 * m.cell_area(c);
    for (int q = 0; q < rule.size(); ++q) {
      const double d = b.divergence[q].dot(loc);
      sum += rule.weights[q] * jac * d * d;
    }
  }
  return std::sqrt(sum);
}

MembraneFn multiplier_function(const MultiplierSpace& L, const Eigen::VectorXd& coeffs, const ScalarFn& subtract) {
  return [&L, coeffs, subtract](int facet, double t, const Point2& x) {
    const int pos = L.position(facet);
    double v = 0.0;
    if (pos >= 0) {
      const Eigen::VectorXd phi = L.eval(t);
      for (int i = 0; i < L.dofs_per_facet(); ++i) v += coeffs[L.dof(pos, i)] * phi[i];
    }
    if (subtract) v -= subtract(x);
    return v;
  };
}

double mesh_half_error(const MultiplierSpace& L, const Eigen::VectorXd& coeffs, const ScalarFn& exact, int quadrature) {
  const Mesh& m = L.mesh();
  const MembraneFn f = multiplier_function(L, coeffs, exact);
  double sum = 0.0;
  for (int facet : L.facets()) {
    const FacetQuadrature fq = facet_quadrature(m, facet, quadrature);
    const double h = facet_geometry(m, facet).length;
    for (std::size_t q = 0; q < fq.points.size(); ++q) {
      const double v = f(facet, fq.params[q], fq.points[q]);
      sum += h * fq.weights[q] * v * v;
    }
  }
  return std::sqrt(sum);
}

double mesh_half_norm(const MultiplierSpace& L, const Eigen::VectorXd& coeffs, int quadrature) {
  return mesh_half_error(L, coeffs, {}, quadrature);
}

SpectralMembraneNorm::SpectralMembraneNorm(const Mesh& mesh, int refine, int quadrature) : quadrature_(quadrature) {
  if (refine < 1) throw std::invalid_argument("refinement factor must be positive");
  int ndof = 0;
  for (const MembraneRun& run : membrane_runs(mesh)) {
    int prev = ndof++;
    for (std::size_t i = 0; i < run.facets.size(); ++i) {
      const int f = run.facets[i];
      const Facet& fa = mesh.facet(f);
      // Run direction relative to the facet parameter.
      const bool forward = run.vertices[i] == fa.vertices[0];
      const Point2 a = mesh.vertex(run.vertices[i]), b = mesh.vertex(run.vertices[i + 1]);
      for (int r = 0; r < refine; ++r) {
        const double s0 = static_cast<double>(r) / refine, s1 = static_cast<double>(r + 1) / refine;
        Piece p;
        p.facet = f;
        p.t0 = forward ? s0 : 1.0 - s0;
        p.t1 = forward ? s1 : 1.0 - s1;
        p.x0 = a + s0 * (b - a);
        p.x1 = a + s1 * (b - a);
        p.a = prev;
        p.b = ndof++;
        prev = p.b;
        pieces_.push_back(p);
      }
    }
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ndof, ndof), K = Eigen::MatrixXd::Zero(ndof, ndof);
  for (const Piece& p : pieces_) {
    const double len = (p.x1 - p.x0).norm();
    M(p.a, p.a) += len / 3.0;
    M(p.b, p.b) += len / 3.0;
    M(p.a, p.b) += len / 6.0;
    M(p.b, p.a) += len / 6.0;
    K(p.a, p.a) += 1.0 / len;
    K(p.b, p.b) += 1.0 / len;
    K(p.a, p.b) -= 1.0 / len;
    K(p.b, p.a) -= 1.0 / len;
  }
  mass_ = M;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K + M, M);
  if (es.info() != Eigen::Success) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto sv = svd.singularValues();
    throw std::runtime_error("membrane eigenproblem failed; mass matrix condition number " +
                             std::to_string(sv[0] / sv[sv.size() - 1]));
  }
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
}

Eigen::VectorXd SpectralMembraneNorm::load(const MembraneFn& f) const {
  const QuadratureRule rule = quadrature_rule(RefDomain::Interval, quadrature_);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim());
  for (const Piece& p : pieces_) {
    const double len = (p.x1 - p.x0).norm();
    for (int q = 0; q < rule.size(); ++q) {
      const double s = rule.points(q, 0);
      const double v = f(p.facet, p.t0 + s * (p.t1 - p.t0), p.x0 + s * (p.x1 - p.x0));
      b[p.a] += rule.weights[q] * len * v * (1.0 - s);
      b[p.b] += rule.weights[q] * len * v * s;
    }
  }
  return b;
}

double SpectralMembraneNorm::norm(const MembraneFn& f, double s) const {
  const Eigen::VectorXd c = eigenvectors_.transpose() * load(f);
  double sum = 0.0;
  for (int i = 0; i < c.size(); ++i) sum += c[i] * c[i] * std::pow(eigenvalues_[i], s);
  return std::sqrt(sum);
}

double spectral_fractional_norm(const Mesh& mesh, const ScalarFn& f, double s, int refine) {
  const SpectralMembraneNorm sn(mesh, refine);
  return sn.norm([&f](int, double, const Point2& x) { return f(x); }, s);
}

ErrorRecord field_errors(const Discretization& disc, const SystemState& state, const ExactSolution& exact,
                         int quadrature) {
  const int q = quadrature < 0 ? default_quadrature_degree(disc) + 2 : quadrature;
  ErrorRecord e;
  const Eigen::VectorXd u = state.u(), p = state.p(), lam = state.lambda(), th = state.theta();
  const std::map<BoundaryTag, NitscheMode> boundary =
      disc.interior_penalty() ? disc.problem.nitsche : std::map<BoundaryTag, NitscheMode>{};
  e.e_u = broken_h1_error(*disc.velocity, u, exact.u, exact.grad_u, boundary, q);
  e.e_p = l2_error(*disc.pressure, p, exact.p, q);
  e.e_theta = h1_error(*disc.concentration, th, exact.theta, exact.grad_theta, q);
  if (disc.multiplier->dim() > 0) {
    const SpectralMembraneNorm sn(*disc.mesh, 4, q);
    e.e_lambda = sn.norm(multiplier_function(*disc.multiplier, lam, exact.lambda), -0.5);
    e.e_lambda_mesh = mesh_half_error(*disc.multiplier, lam, exact.lambda, q);
  }
  return e;
}

double normal_flux_integral(const Space& velocity, const Eigen::VectorXd& coeffs, BoundaryTag tag, int quadrature) {
  const Mesh& m = velocity.mesh();
  double sum = 0.0;
  for (int f : m.facets_with_tag(tag)) {
    const FacetGeometry geo = facet_geometry(m, f);
    const FacetQuadrature fq = facet_quadrature(m, f, quadrature);
    const int c = m.facet(f).cells[0];
    const CellBasis b = velocity.tabulate(c, to_reference_points(m, c, fq.points));
    const Eigen::VectorXd loc = gather(velocity, c, coeffs);
    for (std::size_t q = 0; q < fq.points.size(); ++q)
      sum += fq.weights[q] * field_value(b, static_cast<int>(q), loc).dot(geo.normal);
  }
  return sum;
}

}  // namespace memflow
