#include <doctest.h>

#include <random>

#include "memflow/spaces.hpp"

using namespace memflow;

namespace {

std::shared_ptr<const Mesh> square(int n, Diagonal d = Diagonal::Right) {
  return std::make_shared<const Mesh>(generate_structured_rectangle(n, n, 1.0, 1.0, channel_boundary(), d));
}

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

// Values of a field on facet f seen from side s at the facet's Gauss points.
Eigen::MatrixXd trace(const Space& V, const Eigen::VectorXd& x, int f, int s) {
  const Mesh& m = V.mesh();
  const FacetQuadrature fq = facet_quadrature(m, f, 4);
  const int c = m.facet(f).cells[s];
  const CellBasis b = V.tabulate(c, to_reference_points(m, c, fq.points));
  const Eigen::VectorXd loc = gather(V, c, x);
  Eigen::MatrixXd out(fq.points.size(), V.value_size());
  for (int q = 0; q < b.num_points(); ++q) out.row(q) = field_value(b, q, loc).transpose();
  return out;
}

}  // namespace

TEST_CASE("global dimensions follow the entity counts") {
  const auto m = square(3);
  const int nv = m->num_vertices(), ne = m->num_facets(), nc = m->num_cells();
  CHECK(Space(m, ElementFamily::cg(1)).dim() == nv);
  CHECK(Space(m, ElementFamily::cg(2)).dim() == nv + ne);
  CHECK(Space(m, ElementFamily::cg(2, 2)).dim() == 2 * (nv + ne));
  CHECK(Space(m, ElementFamily::dg(1)).dim() == 3 * nc);
  CHECK(Space(m, ElementFamily::dg(0)).dim() == nc);
  CHECK(Space(m, ElementFamily::cr(2)).dim() == 2 * ne);
  CHECK(Space(m, ElementFamily::bdm(1)).dim() == 2 * ne);
  CHECK(Space(m, ElementFamily::bdm(2)).dim() == 3 * ne + 3 * nc);
}

TEST_CASE("BDM fields have continuous normal components across facets") {
  const auto m = square(3, Diagonal::Crossed);
  for (int r = 1; r <= 2; ++r) {
    const Space V(m, ElementFamily::bdm(r));
    const Eigen::VectorXd x = random_vector(V.dim(), 7 + r);
    for (int f : m->interior_facets()) {
      const Point2 n = facet_geometry(*m, f).normal;
      const Eigen::MatrixXd a = trace(V, x, f, 0), b = trace(V, x, f, 1);
      CHECK((a * n - b * n).norm() < 1e-12);
      // The tangential component is discontinuous in general.
    }
  }
}

TEST_CASE("continuous Lagrange fields are continuous") {
  const auto m = square(3);
  const Space V(m, ElementFamily::cg(2));
  const Eigen::VectorXd x = random_vector(V.dim(), 3);
  for (int f : m->interior_facets()) CHECK((trace(V, x, f, 0) - trace(V, x, f, 1)).norm() < 1e-12);
}

TEST_CASE("interpolation reproduces polynomials of the space's degree") {
  const auto m = square(2);
  const VectorFn quad = [](const Point2& p) { return Vector2(p.x() * p.y() + 1.0, p.x() * p.x() - 0.5 * p.y()); };
  for (const auto& fam : {ElementFamily::bdm(2), ElementFamily::cg(2, 2)}) {
    const Space V(m, fam);
    const Eigen::VectorXd x = interpolate(V, quad);
    const std::vector<Point2> pts{Point2(0.2, 0.3), Point2(0.1, 0.1)};
    for (int c = 0; c < m->num_cells(); ++c) {
      const CellBasis b = V.tabulate(c, pts);
      const Eigen::VectorXd loc = gather(V, c, x);
      for (int q = 0; q < 2; ++q) {
        const Point2 phys = CellMap::of_cell(*m, c).to_physical(pts[q]);
        CHECK((field_value(b, q, loc) - quad(phys)).norm() < 1e-12);
      }
    }
  }
}

TEST_CASE("essential conditions fix boundary dofs") {
  const auto m = square(3);
  const VectorFn g = [](const Point2& p) { return Vector2(1.0 + p.y(), 0.0); };
  const Space V = build_space(m, ElementFamily::bdm(1),
                              {{{BoundaryTag::Inlet}, ConstraintComponent::Full, g, {}}});
  CHECK(V.constraints().size() == 2 * m->facets_with_tag(BoundaryTag::Inlet).size());
  const Space T = build_space(m, ElementFamily::cg(2),
                              {{{BoundaryTag::Inlet}, ConstraintComponent::Full, {}, [](const Point2&) { return 2.0; }}});
  for (const auto& [dof, val] : T.constraints()) {
    CHECK(val == 2.0);
    CHECK(T.dof_point(dof).x() == doctest::Approx(0.0));
  }
  Space W(m, ElementFamily::cg(1));
  CHECK(W.constrain(0, 1.0));
  CHECK_FALSE(W.constrain(0, 2.0));
  CHECK(W.constraints().at(0) == 1.0);
}

TEST_CASE("multiplier space follows the membrane ordering") {
  const auto m = square(4);
  const MultiplierSpace L0(m, 0), L1(m, 1);
  CHECK(L0.dim() == 4);
  CHECK(L1.dim() == 8);
  for (std::size_t i = 0; i < L1.facets().size(); ++i) CHECK(L1.position(L1.facets()[i]) == static_cast<int>(i));
  CHECK(L1.position(m->facets_with_tag(BoundaryTag::Wall).front()) == -1);
  const Eigen::VectorXd phi = L1.eval(0.25);
  CHECK(phi[0] == doctest::Approx(0.75));
  CHECK(phi[1] == doctest::Approx(0.25));
  const SystemLayout lay = build_system_layout({5, 3, 2, 4});
  CHECK(lay.total_dim == 14);
  CHECK(lay.offset(SystemLayout::Theta) == 10);
}
