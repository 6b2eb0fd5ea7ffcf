#include "plateopt/sparse_solver.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "plateopt/errors.hpp"

namespace plateopt {

BlockSymmetricMatrix::BlockSymmetricMatrix(const std::vector<char>& active,
                                           const std::vector<std::vector<int>>& neighbors, int block_size)
    : bs_(block_size), offset_(active.size(), -1), upper_nbrs_(active.size()) {
  int n = 0;
  for (std::size_t i = 0; i < active.size(); ++i)
    if (active[i]) {
      offset_[i] = n;
      n += bs_;
    }
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) continue;
    auto& u = upper_nbrs_[i];
    for (int j : neighbors[i])
      if (j < static_cast<int>(i) && active[j]) u.push_back(j);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    u.push_back(static_cast<int>(i));
    nnz += (u.size() - 1) * bs_ * bs_ + bs_ * (bs_ + 1) / 2;
  }
  mat_.resize(n, n);
  mat_.resizeNonZeros(static_cast<Eigen::Index>(nnz));
  int* outer = mat_.outerIndexPtr();
  int* inner = mat_.innerIndexPtr();
  int pos = 0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) continue;
    for (int c = 0; c < bs_; ++c) {
      outer[offset_[i] + c] = pos;
      for (int j : upper_nbrs_[i]) {
        const int rows = j == static_cast<int>(i) ? c + 1 : bs_;
        for (int r = 0; r < rows; ++r) inner[pos++] = offset_[j] + r;
      }
    }
  }
  outer[n] = pos;
  set_zero();
}

void BlockSymmetricMatrix::set_zero() { std::fill_n(mat_.valuePtr(), mat_.nonZeros(), 0.0); }

void BlockSymmetricMatrix::add_block(int i, int j, const Eigen::Ref<const Eigen::MatrixXd>& block) {
  // Column node is the larger index.
  const bool swap = i > j;
  const int col = swap ? i : j, row = swap ? j : i;
  const auto& u = upper_nbrs_[col];
  const auto it = std::lower_bound(u.begin(), u.end(), row);
  const int slot = static_cast<int>(it - u.begin());
  double* val = mat_.valuePtr();
  const int* outer = mat_.outerIndexPtr();
  for (int c = 0; c < bs_; ++c) {
    double* colv = val + outer[offset_[col] + c] + slot * bs_;
    if (row == col) {
      for (int r = 0; r <= c; ++r) colv[r] += block(r, c);
    } else if (swap) {
      for (int r = 0; r < bs_; ++r) colv[r] += block(c, r);
    } else {
      for (int r = 0; r < bs_; ++r) colv[r] += block(r, c);
    }
  }
}

void BlockSymmetricMatrix::scale_diagonal(double factor) {
  double* val = mat_.valuePtr();
  const int* outer = mat_.outerIndexPtr();
  for (int c = 0; c < mat_.cols(); ++c) val[outer[c + 1] - 1] *= factor;
}

void BlockSymmetricMatrix::add_diagonal(double value) {
  double* val = mat_.valuePtr();
  const int* outer = mat_.outerIndexPtr();
  for (int c = 0; c < mat_.cols(); ++c) val[outer[c + 1] - 1] += value;
}

double BlockSymmetricMatrix::mean_abs_diagonal() const {
  const double* val = mat_.valuePtr();
  const int* outer = mat_.outerIndexPtr();
  double s = 0.0;
  for (int c = 0; c < mat_.cols(); ++c) s += std::abs(val[outer[c + 1] - 1]);
  return mat_.cols() > 0 ? s / static_cast<double>(mat_.cols()) : 0.0;
}

struct SymmetricSolver::Impl {
  Eigen::CholmodSimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Upper> llt;
  Eigen::CholmodSimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Upper> ldlt;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  enum class Kind { LLT, LDLT, LU } kind = Kind::LLT;
  bool analyzed = false;
  Eigen::Index rows = -1;
  Eigen::Index nnz = -1;
};

SymmetricSolver::SymmetricSolver() : impl_(std::make_unique<Impl>()) {
  // Failed Cholesky attempts are expected (indefinite fallback), keep CHOLMOD quiet.
  impl_->llt.cholmod().print = 0;
  impl_->ldlt.cholmod().print = 0;
}
SymmetricSolver::~SymmetricSolver() = default;

bool SymmetricSolver::factorize(const Eigen::SparseMatrix<double>& upper, bool definite_only) {
  Impl& m = *impl_;
  if (!m.analyzed || m.rows != upper.rows() || m.nnz != upper.nonZeros()) {
    m.llt.analyzePattern(upper);
    m.analyzed = true;
    m.rows = upper.rows();
    m.nnz = upper.nonZeros();
  }
  m.llt.factorize(upper);
  used_lu_ = false;
  m.kind = Impl::Kind::LLT;
  if (m.llt.info() == Eigen::Success) return true;
  if (definite_only) return false;
  used_lu_ = true;
  m.ldlt.compute(upper);
  if (m.ldlt.info() == Eigen::Success) {
    m.kind = Impl::Kind::LDLT;
    return true;
  }
  const Eigen::SparseMatrix<double> full = upper.selfadjointView<Eigen::Upper>();
  m.lu.compute(full);
  m.kind = Impl::Kind::LU;
  return m.lu.info() == Eigen::Success;
}

Eigen::VectorXd SymmetricSolver::solve(const Eigen::VectorXd& rhs) const {
  switch (impl_->kind) {
    case Impl::Kind::LLT:
      return impl_->llt.solve(rhs);
    case Impl::Kind::LDLT:
      return impl_->ldlt.solve(rhs);
    case Impl::Kind::LU:
      break;
  }
  return impl_->lu.solve(rhs);
}

}  // namespace plateopt
