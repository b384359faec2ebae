// SPDX-License-Identifier: Apache-2.0
#include "morkit/system_ops.hpp"

namespace morkit {

namespace {

// s*E - A as a compressed complex matrix.  Triplet accumulation merges the
// patterns; each entry sums at most one E and one A contribution.
ComplexSparseCol shifted_matrix(const SparseMatrix& e, const SparseMatrix& a, Complex s) {
  std::vector<Eigen::Triplet<Complex>> ts;
  ts.reserve(std::size_t(e.nonZeros() + a.nonZeros()));
  for (Index i = 0; i < e.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(e, i); it; ++it) {
      ts.emplace_back(it.row(), it.col(), s * it.value());
    }
  }
  for (Index i = 0; i < a.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      ts.emplace_back(it.row(), it.col(), Complex(-it.value()));
    }
  }
  ComplexSparseCol m(e.rows(), e.cols());
  m.setFromTriplets(ts.begin(), ts.end());
  m.makeCompressed();
  return m;
}

}  // namespace

RegularOps::RegularOps(const DescriptorSystem& sys) : sys_(sys), a_(sys.A) {}

DenseBlock RegularOps::solve_a(const DenseBlock& rhs) const { return a_.solve(rhs); }

DenseBlock RegularOps::apply_a(const DenseBlock& x) const { return sys_.A * x; }

DenseBlock RegularOps::solve_e(const DenseBlock& rhs) const {
  std::call_once(e_once_, [this] { e_ = Factorization(sys_.E); });
  return e_.solve(rhs);
}

DenseBlock RegularOps::apply_e(const DenseBlock& x) const { return sys_.E * x; }

DenseBlock RegularOps::input_block() const { return to_dense(sys_.B); }

DenseBlock RegularOps::output_block_t() const {
  return DenseBlock(to_dense(sys_.L).transpose());
}

ComplexBlock RegularOps::eval_transfer(Complex s) const {
  ComplexBlock rhs = to_dense(sys_.B).cast<Complex>();
  ComplexBlock x;
  try {
    const ComplexFactorization f(shifted_matrix(sys_.E, sys_.A, s));
    x = f.solve(rhs);
  } catch (const SingularMatrix& e) {
    throw PoleHit(s, e.what());
  }
  return sys_.L * x + sys_.D.cast<Complex>();
}

RegularizedOps::RegularizedOps(std::shared_ptr<const RegularizedSystem> reg)
    : reg_(std::move(reg)) {}

DenseBlock RegularizedOps::solve_e(const DenseBlock& rhs) const {
  std::call_once(e_once_, [this] { e_ = Factorization(reg_->state_e()); });
  return e_.solve(rhs);
}

ComplexBlock RegularizedOps::eval_transfer(Complex s) const {
  std::call_once(a_once_, [this] { dense_a_ = reg_->dense_a(); });
  const Index n = order();
  ComplexBlock lhs = (-dense_a_).cast<Complex>();
  lhs += s * to_dense(reg_->state_e()).cast<Complex>();
  Eigen::PartialPivLU<ComplexBlock> lu(lhs);
  const ComplexBlock x = lu.solve(reg_->input().cast<Complex>());
  if (!x.allFinite()) throw PoleHit(s, "shifted dense solve produced non-finite values");
  return reg_->output_t().transpose().cast<Complex>() * x +
         reg_->feedthrough().cast<Complex>();
}

}  // namespace morkit
