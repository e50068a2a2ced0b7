#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "memflow/spaces.hpp"

namespace memflow {

/// Row-compressed sparse storage used for every assembled operator.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

class CompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization failure. `pivot` is the offending column when the
/// factorization reports one, otherwise -1.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int pivot) : std::runtime_error(what), pivot_(pivot) {}
  [[nodiscard]] int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// A matrix placed at block (row_block, col_block) of a SystemLayout.
struct PositionedBlock {
  SystemLayout::Block row_block;
  SystemLayout::Block col_block;
  const SparseMatrix* matrix;
};

/// Sums the positioned blocks into one operator of size total_dim.
SparseMatrix compose_monolithic(const std::vector<PositionedBlock>& blocks, const SystemLayout& layout);

/// Adds `m` into `triplets` shifted by (row_offset, col_offset).
void append_triplets(const SparseMatrix& m, int row_offset, int col_offset, std::vector<Triplet>& triplets);

struct LinearSolveReport {
  double relative_residual = 0.0;  ///< ||Ax-b|| / ||b|| (absolute when b = 0)
  bool factorized = false;
  std::string status;
};

/// Direct sparse LU with partial pivoting. Throws SolverError when the
/// factorization fails.
Eigen::VectorXd lu_solve(const SparseMatrix& a, const Eigen::VectorXd& b, LinearSolveReport* report = nullptr);

/// Restriction of `a` to the given rows and columns (index lists sorted).
SparseMatrix extract_submatrix(const SparseMatrix& a, const std::vector<int>& rows, const std::vector<int>& cols);

}  // namespace memflow
