#include <doctest.h>

#include <cmath>

#include "memflow/norms.hpp"
#include "memflow/verification.hpp"

using namespace memflow;

namespace {

std::shared_ptr<const Mesh> square(int n) {
  return std::make_shared<const Mesh>(generate_structured_rectangle(n, n, 1.0, 1.0, channel_boundary()));
}

}  // namespace

TEST_CASE("L2 and H1 norms of interpolated polynomials are exact") {
  const auto m = square(3);
  const Space T(m, ElementFamily::cg(2));
  const Eigen::VectorXd x = interpolate(T, ScalarFn([](const Point2& p) { return p.x() * p.y(); }));
  CHECK(l2_norm(T, x, 6) == doctest::Approx(std::sqrt(1.0 / 9.0)));
  CHECK(l2_error(T, x, [](const Point2& p) { return p.x() * p.y(); }, 6) < 1e-13);
  // |grad(xy)|^2 integrates to 2/3.
  CHECK(h1_error(T, x, [](const Point2&) { return 0.0; }, [](const Point2&) { return Vector2::Zero(); }, 6) ==
        doctest::Approx(std::sqrt(1.0 / 9.0 + 2.0 / 3.0)));
}

TEST_CASE("broken H1 norm charges jumps and treated boundaries") {
  const auto m = square(2);
  const Space V(m, ElementFamily::bdm(1));
  const Eigen::VectorXd c = interpolate(V, VectorFn([](const Point2&) { return Vector2(1.0, 0.0); }));
  // A constant field: no gradient, no interior jump; only the L2 part and
  // boundary jumps on tags with a Nitsche mode.
  CHECK(broken_h1_norm(V, c, {}, 5) == doctest::Approx(1.0));
  const double with_inlet = broken_h1_norm(V, c, {{BoundaryTag::Inlet, NitscheMode::Full}}, 5);
  // h_e^{-1} ||1||^2_e summed over the two inlet facets of length 1/2: 2 * 2 * 1/2 = 2.
  CHECK(with_inlet == doctest::Approx(std::sqrt(1.0 + 2.0)));
  CHECK(broken_h1_norm(V, c, {{BoundaryTag::Inlet, NitscheMode::Tangential}}, 5) == doctest::Approx(1.0));
  CHECK(divergence_l2_norm(V, c, 5) < 1e-14);
}

TEST_CASE("spectral membrane norm: constants are eigenfunctions with eigenvalue one") {
  const auto m = square(4);
  const SpectralMembraneNorm sn(*m);
  CHECK(sn.eigenvalues().minCoeff() == doctest::Approx(1.0));
  const MembraneFn one = [](int, double, const Point2&) { return 1.0; };
  for (double s : {-0.5, 0.0, 0.5, 1.0}) CHECK(sn.norm(one, s) == doctest::Approx(1.0));
  // cos(pi x) on [0,1] has 1D Neumann eigenvalue 1 + pi^2.
  const MembraneFn cosine = [](int, double, const Point2& p) { return std::cos(M_PI * p.x()); };
  const double l2 = sn.norm(cosine, 0.0);
  CHECK(l2 == doctest::Approx(std::sqrt(0.5)).epsilon(1e-2));
  CHECK(sn.norm(cosine, -0.5) == doctest::Approx(l2 * std::pow(1.0 + M_PI * M_PI, -0.25)).epsilon(2e-2));
  CHECK(spectral_fractional_norm(*m, [](const Point2&) { return 2.0; }, -0.5) == doctest::Approx(2.0));
}

TEST_CASE("mesh-dependent multiplier norm scales with sqrt(h)") {
  for (int n : {4, 8}) {
    const auto m = square(n);
    const MultiplierSpace L(m, 0);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(L.dim());
    CHECK(mesh_half_norm(L, ones, 3) == doctest::Approx(std::sqrt(1.0 / n)));
  }
}

TEST_CASE("field errors vanish for the interpolated exact solution in reproducing spaces") {
  const auto mc = manufactured_case();
  const Discretization disc = discretize(manufactured_problem(mc, manufactured_mesh(mc, 4), {}));
  SystemState s(disc.layout);
  const ErrorRecord e = field_errors(disc, s, mc.exact);
  // Zero state: the errors are the norms of the exact fields.
  CHECK(e.e_theta > 0.5);
  CHECK(e.e_u > 1.0);
  CHECK(e.e_lambda > 0.0);
  const double flux = normal_flux_integral(
      *disc.velocity, interpolate(*disc.velocity, VectorFn([](const Point2&) { return Vector2(1.0, 0.0); })),
      BoundaryTag::Outlet, 5);
  CHECK(flux == doctest::Approx(1.0));
}
