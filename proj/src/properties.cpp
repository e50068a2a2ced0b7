#include "memflow/properties.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "memflow/assembly.hpp"
#include "memflow/norms.hpp"
#include "memflow/verification.hpp"

namespace memflow {

namespace {

Eigen::VectorXd randn(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

std::vector<int> free_dofs(const Space& s) {
  std::vector<int> out;
  for (int i = 0; i < s.dim(); ++i)
    if (!s.is_constrained(i)) out.push_back(i);
  return out;
}

std::shared_ptr<const Mesh> square(int n, bool all_wall) {
  BoundarySpec spec;
  if (all_wall) {
    for (auto s : {Side::Bottom, Side::Right, Side::Top, Side::Left}) spec.set(s, BoundaryTag::Wall);
  } else {
    spec = channel_boundary();
  }
  return std::make_shared<const Mesh>(generate_structured_rectangle(n, n, 1.0, 1.0, spec, Diagonal::Right));
}

// BDM_{k+1} with zero normal trace on every tag present.
Space sealed_bdm(const std::shared_ptr<const Mesh>& mesh, int k) {
  EssentialCondition c;
  c.component = ConstraintComponent::Normal;
  c.vector_data = [](const Point2&) { return Vector2::Zero(); };
  for (auto t : kAllTags)
    if (!mesh->facets_with_tag(t).empty()) c.tags.push_back(t);
  return build_space(mesh, ElementFamily::bdm(k + 1), {c});
}

}  // namespace

Eigen::MatrixXd divergence_free_basis(const Space& velocity, const Space& pressure, int quadrature) {
  const MultiplierSpace none(velocity.mesh_ptr(), 0, true);
  const SparseMatrix b1 = assemble_b(velocity, pressure, none, quadrature).b1;
  const auto free = free_dofs(velocity);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(b1.rows(), static_cast<Eigen::Index>(free.size()));
  const Eigen::MatrixXd dense = Eigen::MatrixXd(b1);
  for (std::size_t j = 0; j < free.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = dense.col(free[j]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd ker = lu.kernel();
  // Orthonormal columns keep random combinations well scaled.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ker);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(ker.rows(), ker.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(velocity.dim(), q.cols());
  for (std::size_t j = 0; j < free.size(); ++j) out.row(free[j]) = q.row(static_cast<Eigen::Index>(j));
  return out;
}

UpwindCheck check_upwind_positivity(int k, const PropertyOptions& opt) {
  const auto mesh = square(opt.mesh_cells, true);
  const Space V = sealed_bdm(mesh, k);
  const Space Q = build_space(mesh, ElementFamily::dg(k));
  const int q = default_quadrature_degree(k + 1);
  const Eigen::MatrixXd basis = divergence_free_basis(V, Q, q);
  std::mt19937_64 rng(opt.seed);
  UpwindCheck out;
  out.min_energy = std::numeric_limits<double>::infinity();
  for (int s = 0; s < opt.samples; ++s) {
    const Eigen::VectorXd w = basis * randn(rng, basis.cols());
    const Eigen::VectorXd u = randn(rng, V.dim());
    const SparseMatrix op = assemble_upwind_convection(V, w, u, 1.0, q).op;
    const double energy = u.dot(op * u);
    // Jump form, assembled facet by facet from both sides' traces.
    double jumps = 0.0;
    for (int f : mesh->interior_facets()) {
      const Facet& fc = mesh->facet(f);
      const FacetGeometry geo = facet_geometry(*mesh, f);
      const FacetQuadrature fq = facet_quadrature(*mesh, f, q);
      const CellBasis b0 = V.tabulate(fc.cells[0], to_reference_points(*mesh, fc.cells[0], fq.points));
      const CellBasis b1 = V.tabulate(fc.cells[1], to_reference_points(*mesh, fc.cells[1], fq.points));
      const Eigen::VectorXd u0 = gather(V, fc.cells[0], u), u1 = gather(V, fc.cells[1], u);
      const Eigen::VectorXd w0 = gather(V, fc.cells[0], w);
      for (int i = 0; i < static_cast<int>(fq.points.size()); ++i) {
        const double wn = field_value(b0, i, w0).dot(geo.normal);
        jumps += fq.weights[i] * std::abs(wn) * (field_value(b0, i, u0) - field_value(b1, i, u1)).squaredNorm();
      }
    }
    jumps *= 0.5;
    out.min_energy = std::min(out.min_energy, energy);
    out.max_identity_defect = std::max(out.max_identity_defect, std::abs(energy - jumps) / std::max(jumps, 1e-300));
  }
  return out;
}

namespace {

struct TransportSetup {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<Space> velocity;  // unconstrained, used for evaluation
  Eigen::MatrixXd sealed_basis;
  std::shared_ptr<Space> concentration;
  int q = 0;
};

TransportSetup transport_setup(int k, int cells) {
  TransportSetup t;
  t.mesh = square(cells, false);
  t.velocity = std::make_shared<Space>(build_space(t.mesh, ElementFamily::bdm(k + 1)));
  const Space sealed = sealed_bdm(t.mesh, k);
  t.q = default_quadrature_degree(k + 1);
  t.sealed_basis = divergence_free_basis(sealed, build_space(t.mesh, ElementFamily::dg(k)), t.q);
  t.concentration = std::make_shared<Space>(build_space(t.mesh, ElementFamily::cg(k + 1)));
  return t;
}

double transport_energy(const TransportSetup& t, const Eigen::VectorXd& w, const Eigen::VectorXd& tau) {
  const SparseMatrix op = assemble_c_tilde(*t.concentration, *t.velocity, w, tau, t.q).op;
  return tau.dot(op * tau);
}

}  // namespace

double check_transport_positivity(int k, const PropertyOptions& opt) {
  const TransportSetup t = transport_setup(k, opt.mesh_cells);
  std::mt19937_64 rng(opt.seed + 1);
  std::uniform_real_distribution<double> speed(0.2, 2.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < opt.samples; ++s) {
    const double a = speed(rng);
    const Eigen::VectorXd w = interpolate(*t.velocity, [a](const Point2&) { return Vector2(a, 0.0); }) +
                              t.sealed_basis * randn(rng, t.sealed_basis.cols());
    worst = std::min(worst, transport_energy(t, w, randn(rng, t.concentration->dim())));
  }
  return worst;
}

double check_transport_identity(int k, const PropertyOptions& opt) {
  const TransportSetup t = transport_setup(k, opt.mesh_cells);
  std::mt19937_64 rng(opt.seed + 2);
  const Mesh& m = *t.mesh;
  double worst = 0.0;
  for (int s = 0; s < opt.samples; ++s) {
    const Vector2 c = randn(rng, 2);
    const Eigen::VectorXd w = interpolate(*t.velocity, [c](const Point2&) { return c; }) +
                              t.sealed_basis * randn(rng, t.sealed_basis.cols());
    const Eigen::VectorXd tau = randn(rng, t.concentration->dim());
    const double lhs = transport_energy(t, w, tau);
    double rhs = 0.0, scale = 0.0;
    for (int f : m.boundary_facets()) {
      const int cell = m.facet(f).cells[0];
      const FacetGeometry geo = facet_geometry(m, f);
      const FacetQuadrature fq = facet_quadrature(m, f, t.q);
      const auto ref = to_reference_points(m, cell, fq.points);
      const CellBasis bw = t.velocity->tabulate(cell, ref);
      const CellBasis bt = t.concentration->tabulate(cell, ref);
      const Eigen::VectorXd lw = gather(*t.velocity, cell, w), lt = gather(*t.concentration, cell, tau);
      const double sign = m.has_tag(f, BoundaryTag::Outlet) ? 0.5 : -0.5;
      for (int i = 0; i < static_cast<int>(fq.points.size()); ++i) {
        const double term = fq.weights[i] * field_value(bw, i, lw).dot(geo.normal) * std::pow(field_value(bt, i, lt)[0], 2);
        rhs += sign * term;
        scale += std::abs(term);
      }
    }
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(scale, 1e-300));
  }
  return worst;
}

double coercivity_constant(Scheme scheme, int k, double alpha0, int cells) {
  const ManufacturedCase mc = manufactured_case(PhysicalParams{}, Side::Bottom);
  DiscretizationParams dp;
  dp.k = k;
  dp.scheme = scheme;
  dp.alpha0 = alpha0;
  const Discretization disc = discretize(manufactured_problem(mc, manufactured_mesh(mc, cells, Diagonal::Right), dp));
  const Space& V = *disc.velocity;
  ViscousForm form;
  form.mu = 1.0;
  form.alpha0 = alpha0;
  form.interior_penalty = true;
  form.modes = disc.problem.nitsche;
  form.quadrature = default_quadrature_degree(disc);
  const Eigen::MatrixXd a = Eigen::MatrixXd(assemble_a_h(V, form));
  const auto free = free_dofs(V);
  const auto n = static_cast<Eigen::Index>(free.size());
  // Gram matrix of the broken norm by polarization.
  auto sq = [&](const Eigen::VectorXd& v) {
    const double r = broken_h1_norm(V, v, form.modes, form.quadrature);
    return r * r;
  };
  Eigen::MatrixXd g(n, n), af(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(V.dim());
  Eigen::VectorXd diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e.setZero();
    e[free[i]] = 1.0;
    diag[i] = sq(e);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = diag[i];
    for (Eigen::Index j = 0; j < i; ++j) {
      e.setZero();
      e[free[i]] = 1.0;
      e[free[j]] = 1.0;
      g(i, j) = g(j, i) = 0.5 * (sq(e) - diag[i] - diag[j]);
    }
    for (Eigen::Index j = 0; j < n; ++j) af(i, j) = a(free[i], free[j]);
  }
  af = 0.5 * (af + af.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(af, g, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  return es.eigenvalues().minCoeff();
}

double jacobian_fd_defect(const DiscretizationParams& dp, std::uint64_t seed) {
  const ManufacturedCase mc = manufactured_case(PhysicalParams{}, Side::Bottom);
  ProblemDefinition pb = manufactured_problem(mc, manufactured_mesh(mc, 2, Diagonal::Right), dp);
  pb.law.g_b = 0.37;  // make the membrane row depend on the concentration
  const Discretization disc = discretize(pb);
  const SystemOperator op(disc);
  std::mt19937_64 rng(seed);
  const Eigen::VectorXd x = randn(rng, disc.layout.total_dim);
  const SparseMatrix jac = op.jacobian(x);
  const double eps = 1e-4;
  double worst = 0.0;
  for (int b = 0; b < 4; ++b) {
    const auto cb = static_cast<SystemLayout::Block>(b);
    if (disc.layout.size(cb) == 0) continue;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
    v.segment(disc.layout.offset(cb), disc.layout.size(cb)) = randn(rng, disc.layout.size(cb));
    const Eigen::VectorXd fd = (op.residual(x + eps * v) - op.residual(x - eps * v)) / (2.0 * eps);
    const Eigen::VectorXd jv = jac * v;
    for (int a = 0; a < 4; ++a) {
      const auto rb = static_cast<SystemLayout::Block>(a);
      if (disc.layout.size(rb) == 0) continue;
      const auto off = disc.layout.offset(rb), len = disc.layout.size(rb);
      const double ref = std::max(jv.segment(off, len).norm(), fd.segment(off, len).norm());
      if (ref < 1e-9) continue;  // structurally zero block
      worst = std::max(worst, (jv.segment(off, len) - fd.segment(off, len)).norm() / ref);
    }
  }
  return worst;
}

std::vector<PropertyResult> property_suite(const PropertyOptions& opt) {
  std::vector<PropertyResult> out;
  auto add = [&](std::string name, double value, const char* rel, double thr) {
    const std::string r = rel;
    const bool pass = r == ">=" ? value >= thr : r == ">" ? value > thr : value <= thr;
    out.push_back({std::move(name), value, thr, r, pass});
  };
  for (int k : {0, 1}) {
    const std::string tag = "bdm k=" + std::to_string(k);
    const UpwindCheck up = check_upwind_positivity(k, opt);
    add("upwind energy min, " + tag, up.min_energy, ">=", -1e-12);
    add("upwind energy equals jump form, " + tag, up.max_identity_defect, "<=", 1e-10);
    add("transport energy min, " + tag, check_transport_positivity(k, opt), ">=", -1e-12);
    add("transport boundary identity, " + tag, check_transport_identity(k, opt), "<=", 1e-10);
    add("viscous coercivity, " + tag, coercivity_constant(Scheme::DivConformingDG, k, DiscretizationParams::default_alpha0(k), 2),
        ">", 0.0);
  }
  add("viscous coercivity, cr", coercivity_constant(Scheme::CrouzeixRaviart, 0, DiscretizationParams::default_alpha0(0), 2), ">",
      0.0);
  struct Case {
    const char* name;
    DiscretizationParams dp;
  };
  const Case cases[] = {
      {"bdm k=0", {0, 20.0, 0, Scheme::DivConformingDG, -1}},
      {"bdm k=1", {1, 30.0, 0, Scheme::DivConformingDG, -1}},
      {"cr", {0, 20.0, 0, Scheme::CrouzeixRaviart, -1}},
      {"th delta=-1", {1, 0.1, -1, Scheme::ConformingStabilized, 1}},
      {"th delta=1", {1, 0.1, 1, Scheme::ConformingStabilized, 1}},
  };
  for (const auto& c : cases) add(std::string("jacobian vs differences, ") + c.name, jacobian_fd_defect(c.dp, opt.seed), "<=", 1e-6);
  return out;
}

}  // namespace memflow
