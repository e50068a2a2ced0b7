#include "memflow/linalg.hpp"

#include <regex>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

namespace memflow {

void append_triplets(const SparseMatrix& m, int row_offset, int col_offset, std::vector<Triplet>& triplets) {
  for (int r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it)
      triplets.emplace_back(row_offset + static_cast<int>(it.row()), col_offset + static_cast<int>(it.col()),
                            it.value());
}

SparseMatrix compose_monolithic(const std::vector<PositionedBlock>& blocks, const SystemLayout& layout) {
  std::vector<Triplet> triplets;
  for (const auto& b : blocks) {
    if (b.matrix == nullptr) throw CompositionError("null block");
    if (b.matrix->rows() != layout.size(b.row_block) || b.matrix->cols() != layout.size(b.col_block))
      throw CompositionError("block of size " + std::to_string(b.matrix->rows()) + "x" +
                             std::to_string(b.matrix->cols()) + " does not fit layout slot " +
                             std::to_string(layout.size(b.row_block)) + "x" +
                             std::to_string(layout.size(b.col_block)));
    append_triplets(*b.matrix, layout.offset(b.row_block), layout.offset(b.col_block), triplets);
  }
  SparseMatrix out(layout.total_dim, layout.total_dim);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Eigen::VectorXd lu_solve(const SparseMatrix& a, const Eigen::VectorXd& b, LinearSolveReport* report) {
  if (a.rows() != a.cols()) throw SolverError("matrix is not square", -1);
  if (a.rows() != b.size()) throw SolverError("right-hand side size mismatch", -1);
  LinearSolveReport local;
  LinearSolveReport& rep = report ? *report : local;
  if (a.rows() == 0) {
    rep.factorized = true;
    rep.status = "empty system";
    return Eigen::VectorXd();
  }
  Eigen::SparseMatrix<double> col = a;
  col.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(col);
  lu.factorize(col);
  if (lu.info() != Eigen::Success) {
    rep.factorized = false;
    rep.status = lu.lastErrorMessage();
    int pivot = -1;
    std::smatch m;
    const std::string msg = rep.status;
    if (std::regex_search(msg, m, std::regex("([0-9]+)"))) pivot = std::stoi(m[1]);
    throw SolverError("sparse LU factorization failed: " + msg, pivot);
  }
  rep.factorized = true;
  Eigen::VectorXd x = lu.solve(b);
  const double bn = b.norm();
  const double rn = (a * x - b).norm();
  rep.relative_residual = bn > 0.0 ? rn / bn : rn;
  rep.status = "ok";
  if (!x.allFinite()) throw SolverError("sparse LU produced non-finite values", -1);
  return x;
}

SparseMatrix extract_submatrix(const SparseMatrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> col_map(a.cols(), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) col_map[cols[j]] = static_cast<int>(j);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (SparseMatrix::InnerIterator it(a, rows[i]); it; ++it) {
      const int j = col_map[it.col()];
      if (j >= 0) t.emplace_back(static_cast<int>(i), j, it.value());
    }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace memflow
