#include <doctest.h>

#include <random>

#include "memflow/assembly.hpp"
#include "memflow/verification.hpp"

using namespace memflow;

namespace {

std::shared_ptr<const Mesh> square(int n) {
  return std::make_shared<const Mesh>(generate_structured_rectangle(n, n, 1.0, 1.0, channel_boundary()));
}

double asymmetry(const SparseMatrix& a) {
  const Eigen::MatrixXd d(a);
  return (d - d.transpose()).norm() / std::max(d.norm(), 1e-300);
}

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

}  // namespace

TEST_CASE("quadrature degree grows with the space degree") {
  CHECK(default_quadrature_degree(1) == 5);
  CHECK(default_quadrature_degree(2) == 7);
}

TEST_CASE("Nitsche projectors select the constrained component") {
  const Vector2 n(0.6, 0.8);
  CHECK(nitsche_projector(NitscheMode::Full, n).isApprox(Matrix2::Identity()));
  CHECK(nitsche_projector(NitscheMode::None, n).isZero());
  const Matrix2 pn = nitsche_projector(NitscheMode::Normal, n), pt = nitsche_projector(NitscheMode::Tangential, n);
  CHECK((pn + pt).isApprox(Matrix2::Identity()));
  CHECK((pn * n).isApprox(n));
  CHECK((pt * n).norm() < 1e-15);
}

TEST_CASE("viscous form is symmetric and reproduces mu (grad u, grad v) for smooth fields") {
  const auto m = square(3);
  const Space V(m, ElementFamily::bdm(2));
  ViscousForm form;
  form.mu = 1.7;
  form.modes = {{BoundaryTag::Inlet, NitscheMode::Full}, {BoundaryTag::Wall, NitscheMode::Full}};
  form.quadrature = 7;
  const SparseMatrix a = assemble_a_h(V, form);
  CHECK(asymmetry(a) < 1e-12);
  // With f = x(1-y), u = (f, f) and v = (f, 0) vanish on the inlet and the
  // wall and have no jumps, so only the volume term survives:
  // mu int |grad f|^2 = mu (1/3 + 1/3).
  const ScalarFn f = [](const Point2& p) { return p.x() * (1 - p.y()); };
  const Eigen::VectorXd xu = interpolate(V, VectorFn([&](const Point2& p) { return Vector2(f(p), f(p)); }));
  const Eigen::VectorXd xv = interpolate(V, VectorFn([&](const Point2& p) { return Vector2(f(p), 0.0); }));
  const double exact = 2.0 / 3.0;
  CHECK(xv.dot(a * xu) == doctest::Approx(1.7 * exact).epsilon(1e-10));
}

TEST_CASE("pressure coupling is exact for polynomial fields") {
  const auto m = square(3);
  const Space V(m, ElementFamily::bdm(1)), Q(m, ElementFamily::dg(0));
  const MultiplierSpace L(m, 0);
  const CouplingBlocks b = assemble_b(V, Q, L, 5);
  CHECK(b.b1.rows() == Q.dim());
  CHECK(b.b2.rows() == L.dim());
  // div(x, -y) = 0 and div(x, y) = 2.
  const Eigen::VectorXd free = interpolate(V, VectorFn([](const Point2& p) { return Vector2(p.x(), -p.y()); }));
  CHECK((b.b1 * free).norm() < 1e-13);
  const Eigen::VectorXd two = interpolate(V, VectorFn([](const Point2& p) { return Vector2(p.x(), p.y()); }));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(Q.dim());
  CHECK(ones.dot(b.b1 * two) == doctest::Approx(-2.0));
  // Flux of (0, y - 2) through the membrane y=0 with outward normal (0,-1): +2.
  const Eigen::VectorXd down = interpolate(V, VectorFn([](const Point2& p) { return Vector2(0.0, p.y() - 2.0); }));
  CHECK(Eigen::VectorXd::Ones(L.dim()).dot(b.b2 * down) == doctest::Approx(2.0));
}

TEST_CASE("diffusion matrix is symmetric with constants in its kernel") {
  const auto m = square(3);
  const Space T(m, ElementFamily::cg(2));
  const SparseMatrix c = assemble_c(T, 0.3, 7);
  CHECK(asymmetry(c) < 1e-13);
  CHECK((c * Eigen::VectorXd::Ones(T.dim())).norm() < 1e-12);
  const Eigen::VectorXd x = interpolate(T, ScalarFn([](const Point2& p) { return p.x(); }));
  CHECK(x.dot(c * x) == doctest::Approx(0.3));
}

TEST_CASE("upwind convection is homogeneous in the advecting field") {
  const auto m = square(3);
  const Space V(m, ElementFamily::bdm(1));
  const VectorFn lin = [](const Point2& p) { return Vector2(1.0 + p.y(), 0.5 - p.x()); };
  const Eigen::VectorXd w = interpolate(V, lin);
  // The form is positively homogeneous of degree one in w (the upwind
  // switch included), so its w-derivative applied to w gives the form back.
  for (unsigned seed : {1u, 2u, 3u}) {
    const Eigen::VectorXd u = random_vector(V.dim(), seed);
    const ConvectionBlocks cb = assemble_upwind_convection(V, w, u, 2.0, 5);
    CHECK((cb.dw * w - cb.op * u).norm() < 1e-10 * (cb.op * u).norm());
  }
}

TEST_CASE("membrane coupling of the affine law has a constant Jacobian") {
  const auto m = square(4);
  const MultiplierSpace L(m, 1);
  const Space T(m, ElementFamily::cg(2));
  MembraneLaw law = MembraneLaw::darcy_starling(2.0, 3.0, 0.5);
  const Eigen::VectorXd th0 = Eigen::VectorXd::Zero(T.dim()), th1 = Eigen::VectorXd::Ones(T.dim());
  const MembraneCoupling c0 = assemble_membrane_coupling(L, T, law, th0, 7);
  const MembraneCoupling c1 = assemble_membrane_coupling(L, T, law, th1, 7);
  // int_membrane g = 6 at theta=0 and 6 - 1 = 5 at theta=1 (each facet's
  // P1 basis sums to one).
  CHECK(c0.rhs.sum() == doctest::Approx(6.0));
  CHECK(c1.rhs.sum() == doctest::Approx(5.0));
  CHECK((c1.rhs - c0.rhs - c0.jacobian * th1).norm() < 1e-12);
}

TEST_CASE("flow rows are linear once convection is off and the law is frozen") {
  const auto mc = manufactured_case();
  const auto mesh = manufactured_mesh(mc, 3);
  DiscretizationParams dp;
  ProblemDefinition pb = manufactured_problem(mc, mesh, dp);
  pb.convection = false;
  pb.law = MembraneLaw::prescribed([law = pb.law, th = mc.exact.theta](const Point2& x) { return law.eval(x, th(x)); });
  const Discretization disc = discretize(pb);
  const SystemOperator op(disc);
  const SystemState s = stokes_solve(op);
  // Only the concentration rows see the velocity through advection.
  const int flow = disc.layout.offset(SystemLayout::Theta);
  CHECK(residual(op, s).head(flow).norm() < 1e-10);
  const Eigen::MatrixXd j = Eigen::MatrixXd(op.jacobian(s.x)).topRows(flow);
  const Eigen::MatrixXd l = Eigen::MatrixXd(op.linear_part()).topRows(flow);
  CHECK((j - l).norm() < 1e-12);
}
