#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <memory>
#include <vector>

namespace plateopt {

// Upper triangle (CSC) of a symmetric matrix whose unknowns come in blocks of
// equal size, one block per active node, coupled along a node graph. The
// pattern is fixed at construction and values are refilled by add_block.
class BlockSymmetricMatrix {
 public:
  // neighbors[i] lists the nodes coupled to node i (the diagonal is implied).
  BlockSymmetricMatrix(const std::vector<char>& active, const std::vector<std::vector<int>>& neighbors, int block_size);

  int block_size() const { return bs_; }
  int size() const { return static_cast<int>(mat_.rows()); }
  // Offset of node i's block in the unknown vector, -1 if inactive.
  int offset(int node) const { return offset_[node]; }

  void set_zero();
  // Adds a bs x bs block coupling nodes i and j (both active). Blocks with
  // i > j are transposed into the upper triangle; for i == j only the upper
  // part of the block is read.
  void add_block(int i, int j, const Eigen::Ref<const Eigen::MatrixXd>& block);
  void scale_diagonal(double factor);
  void add_diagonal(double value);
  double mean_abs_diagonal() const;

  const Eigen::SparseMatrix<double>& upper() const { return mat_; }

 private:
  int bs_;
  std::vector<int> offset_;
  std::vector<std::vector<int>> upper_nbrs_;  // sorted nodes j <= i (including i) per active node i
  Eigen::SparseMatrix<double> mat_;
};

// Sparse symmetric direct solver: simplicial Cholesky (CHOLMOD), then LDL^T for
// indefinite matrices, then sparse LU. The Cholesky symbolic analysis is
// reused while the pattern stays the same. None of these paths call BLAS.
class SymmetricSolver {
 public:
  SymmetricSolver();
  ~SymmetricSolver();
  SymmetricSolver(const SymmetricSolver&) = delete;
  SymmetricSolver& operator=(const SymmetricSolver&) = delete;

  // Returns false if every factorization fails. With definite_only the
  // indefinite fallbacks are skipped, so success certifies positive definiteness.
  bool factorize(const Eigen::SparseMatrix<double>& upper, bool definite_only = false);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  bool used_lu() const { return used_lu_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  bool used_lu_ = false;
};

}  // namespace plateopt
