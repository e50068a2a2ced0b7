#include <doctest.h>

#include "memflow/linalg.hpp"

using namespace memflow;

namespace {

SparseMatrix from_dense(const Eigen::MatrixXd& d) { return d.sparseView(); }

}  // namespace

TEST_CASE("blocks are composed at their layout offsets") {
  const SystemLayout lay = build_system_layout({2, 1, 1, 1});
  const SparseMatrix a = from_dense(Eigen::MatrixXd::Constant(2, 2, 1.0));
  const SparseMatrix b = from_dense(Eigen::MatrixXd::Constant(1, 2, 2.0));
  const SparseMatrix c = from_dense(Eigen::MatrixXd::Constant(1, 1, 3.0));
  const SparseMatrix m = compose_monolithic({{SystemLayout::U, SystemLayout::U, &a},
                                             {SystemLayout::P, SystemLayout::U, &b},
                                             {SystemLayout::Theta, SystemLayout::Theta, &c},
                                             {SystemLayout::Theta, SystemLayout::Theta, &c}},
                                            lay);
  CHECK(m.rows() == 5);
  CHECK(m.coeff(1, 1) == 1.0);
  CHECK(m.coeff(2, 0) == 2.0);
  CHECK(m.coeff(4, 4) == 6.0);  // duplicates add
  CHECK(m.coeff(3, 3) == 0.0);
  const SparseMatrix wrong = from_dense(Eigen::MatrixXd::Ones(3, 3));
  CHECK_THROWS_AS(compose_monolithic({{SystemLayout::U, SystemLayout::U, &wrong}}, lay), CompositionError);
}

TEST_CASE("sparse LU solves and reports its residual") {
  Eigen::MatrixXd d(3, 3);
  d << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  const Eigen::VectorXd b(Eigen::Vector3d(1, 2, 3));
  LinearSolveReport rep;
  const Eigen::VectorXd x = lu_solve(from_dense(d), b, &rep);
  CHECK((d * x - b).norm() < 1e-14);
  CHECK(rep.factorized);
  CHECK(rep.relative_residual < 1e-14);
  CHECK(lu_solve(SparseMatrix(0, 0), Eigen::VectorXd()).size() == 0);
}

TEST_CASE("singular and malformed systems raise solver errors") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
  d(0, 0) = 1.0;
  d(1, 1) = 1.0;
  CHECK_THROWS_AS(lu_solve(from_dense(d), Eigen::VectorXd::Ones(3)), SolverError);
  CHECK_THROWS_AS(lu_solve(from_dense(Eigen::MatrixXd::Ones(2, 3)), Eigen::VectorXd::Ones(2)), SolverError);
  CHECK_THROWS_AS(lu_solve(from_dense(Eigen::MatrixXd::Identity(2, 2)), Eigen::VectorXd::Ones(3)), SolverError);
}

TEST_CASE("submatrix extraction keeps the selected entries") {
  Eigen::MatrixXd d(3, 3);
  d << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const SparseMatrix s = extract_submatrix(from_dense(d), {0, 2}, {1, 2});
  CHECK(Eigen::MatrixXd(s).isApprox((Eigen::MatrixXd(2, 2) << 2, 3, 8, 9).finished()));
  std::vector<Triplet> t;
  append_triplets(from_dense(Eigen::MatrixXd::Identity(2, 2)), 3, 1, t);
  REQUIRE(t.size() == 2);
  CHECK(t[1].row() == 4);
  CHECK(t[1].col() == 2);
}
