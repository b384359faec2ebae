// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "morkit/types.hpp"

namespace morkit {

// Deflation threshold for the orthogonalization kernels: a candidate column
// whose post-projection norm falls below kRankTol times its reference norm is
// linearly dependent on the basis and gets dropped.
inline constexpr double kRankTol = 1e-10;

// A column-norm collapse by more than this factor during one projection pass
// means cancellation ate the column; one re-orthogonalization pass fixes it.
inline constexpr double kReorthFactor = 0.70710678118654752;  // 1/sqrt(2)

// Opaque LU factorization of a square sparse matrix, built once and reused for
// many right-hand sides.  Construction fails with SingularMatrix when a pivot
// is zero or small enough (relative to the matrix magnitude) that the factors
// are unusable.
class Factorization {
 public:
  Factorization() = default;
  explicit Factorization(const SparseMatrix& a);

  Index order() const { return n_; }
  bool valid() const { return n_ == 0 || lu_ != nullptr; }

  // Solves A * Y = rhs column-wise.
  DenseBlock solve(const DenseBlock& rhs) const;
  // Solves A' * Y = rhs, reusing the same factors.
  DenseBlock solve_transposed(const DenseBlock& rhs) const;

 private:
  // Not const-qualified: Eigen's transpose() view requires a mutable solver,
  // though solving mutates nothing.
  std::shared_ptr<Eigen::SparseLU<SparseMatrixCol>> lu_;
  Index n_ = 0;
};

// Complex variant used for shifted solves (s*E - A) along a frequency sweep.
class ComplexFactorization {
 public:
  explicit ComplexFactorization(const ComplexSparseCol& a);
  Index order() const { return n_; }
  ComplexBlock solve(const ComplexBlock& rhs) const;

 private:
  std::shared_ptr<Eigen::SparseLU<ComplexSparseCol>> lu_;
  Index n_ = 0;
};

struct QrResult {
  DenseBlock q;               // orthonormal columns, possibly fewer than input
  std::vector<Index> kept;    // input column index each q column came from
  Index rank() const { return q.cols(); }
};

// Modified Gram-Schmidt QR with deflation.  Columns are processed left to
// right; each is orthogonalized against the columns already accepted, with a
// conditional second pass when the first one collapses the norm by more than
// kReorthFactor.  Columns whose residual norm falls below rank_tol times the
// reference norm are dropped.  The reference norm defaults to the column's own
// entry norm; engines pass pre-projection norms instead so that candidates
// already annihilated by an earlier projection stage cannot normalize noise.
QrResult qr_mgs(const DenseBlock& x, double rank_tol = kRankTol);
QrResult qr_mgs(const DenseBlock& x, double rank_tol, const Eigen::VectorXd& ref_norms);

// Orthogonalizes the columns of `block` against an orthonormal basis, walking
// the basis in column blocks of width 2*ports (the natural block structure the
// subspace engines append), with a conditional re-orthogonalization pass for
// columns whose norm collapsed.  Returns the projected block.
DenseBlock orth_against(const DenseBlock& block, const DenseBlock& basis, Index ports);

}  // namespace morkit
