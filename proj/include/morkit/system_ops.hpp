// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <mutex>

#include "morkit/mna.hpp"
#include "morkit/regularize.hpp"
#include "morkit/sparse.hpp"
#include "morkit/types.hpp"

namespace morkit {

// Shifted solve hit a pole of the model: s*E - A is numerically singular at
// this sweep point.  Sweeps catch it, flag the point, and move on.
class PoleHit : public Error {
 public:
  PoleHit(Complex s, const std::string& msg)
      : Error("pole at s = (" + std::to_string(s.real()) + ", " +
              std::to_string(s.imag()) + "j): " + msg),
        s_(s) {}
  Complex location() const { return s_; }

 private:
  Complex s_;
};

// Uniform access to a descriptor model (E, A, B, L, D), either a sparse
// assembled system or the implicitly-represented regularized form.  All
// methods are const and safe to call from several threads at once; underlying
// factorizations are built once and only read afterwards.
class DescriptorOps {
 public:
  virtual ~DescriptorOps() = default;
  virtual Index order() const = 0;
  virtual Index num_inputs() const = 0;
  virtual Index num_outputs() const = 0;
  virtual DenseBlock solve_a(const DenseBlock& rhs) const = 0;  // A^-1 rhs
  virtual DenseBlock apply_a(const DenseBlock& x) const = 0;    // A x
  virtual DenseBlock solve_e(const DenseBlock& rhs) const = 0;  // E^-1 rhs
  virtual DenseBlock apply_e(const DenseBlock& x) const = 0;    // E x
  virtual DenseBlock input_block() const = 0;                   // dense B
  virtual DenseBlock output_block_t() const = 0;                // dense L'
  virtual const DenseBlock& feedthrough() const = 0;            // D
  virtual Index nnz_a() const = 0;
  virtual Index nnz_e() const = 0;
  virtual ComplexBlock eval_transfer(Complex s) const = 0;      // L(sE-A)^-1 B + D
};

// Sparse assembled descriptor model.  A is factored on construction; E only
// on the first solve_e (moment-only reductions never touch E^-1, and E may
// legitimately be singular when the model is headed for the regularizer).
class RegularOps : public DescriptorOps {
 public:
  explicit RegularOps(const DescriptorSystem& sys);

  Index order() const override { return sys_.order; }
  Index num_inputs() const override { return sys_.num_inputs; }
  Index num_outputs() const override { return sys_.num_outputs; }
  DenseBlock solve_a(const DenseBlock& rhs) const override;
  DenseBlock apply_a(const DenseBlock& x) const override;
  DenseBlock solve_e(const DenseBlock& rhs) const override;
  DenseBlock apply_e(const DenseBlock& x) const override;
  DenseBlock input_block() const override;
  DenseBlock output_block_t() const override;
  const DenseBlock& feedthrough() const override { return sys_.D; }
  Index nnz_a() const override { return sys_.A.nonZeros(); }
  Index nnz_e() const override { return sys_.E.nonZeros(); }
  ComplexBlock eval_transfer(Complex s) const override;

 private:
  const DescriptorSystem& sys_;
  Factorization a_;
  mutable std::once_flag e_once_;
  mutable Factorization e_;
};

// Regularized model: solves with A go through the bordered factorization,
// products through the low-rank form.  Transfer evaluation assembles the
// dense state matrix once (the regularized order is small by construction).
class RegularizedOps : public DescriptorOps {
 public:
  explicit RegularizedOps(std::shared_ptr<const RegularizedSystem> reg);

  Index order() const override { return reg_->order(); }
  Index num_inputs() const override { return reg_->num_inputs(); }
  Index num_outputs() const override { return reg_->num_outputs(); }
  DenseBlock solve_a(const DenseBlock& rhs) const override { return reg_->solve_a(rhs); }
  DenseBlock apply_a(const DenseBlock& x) const override { return reg_->apply_a(x); }
  DenseBlock solve_e(const DenseBlock& rhs) const override;
  DenseBlock apply_e(const DenseBlock& x) const override { return reg_->state_e() * x; }
  DenseBlock input_block() const override { return reg_->input(); }
  DenseBlock output_block_t() const override { return reg_->output_t(); }
  const DenseBlock& feedthrough() const override { return reg_->feedthrough(); }
  Index nnz_a() const override { return reg_->nnz_a(); }
  Index nnz_e() const override { return reg_->nnz_e(); }
  ComplexBlock eval_transfer(Complex s) const override;

 private:
  std::shared_ptr<const RegularizedSystem> reg_;
  mutable std::once_flag e_once_;
  mutable Factorization e_;
  mutable std::once_flag a_once_;
  mutable DenseBlock dense_a_;
};

}  // namespace morkit
