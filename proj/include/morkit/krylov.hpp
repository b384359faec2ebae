// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "morkit/sparse.hpp"
#include "morkit/system_ops.hpp"
#include "morkit/types.hpp"

namespace morkit {

// Number of solves issued against each system matrix while building a basis.
// `with_a` counts the denser conductance-side solves for RC-dominated nets;
// `with_e` the storage-side solves.
struct SolveCounts {
  long long with_a = 0;
  long long with_e = 0;
};

enum class Direction { Forward, Backward };

// One appended sub-block of a projection basis.  `source_cols` is the width
// of the chain block the operator was applied to (and therefore the number of
// solves issued); `kept_cols` is what survived deflation.
struct BlockRecord {
  Direction dir;
  Index source_cols = 0;
  Index kept_cols = 0;
  Index start = 0;  // first column of the kept sub-block within v
};

struct ProjectionBasis {
  DenseBlock v;                       // orthonormal, order x rank
  std::vector<BlockRecord> schedule;  // construction record, in append order
  SolveCounts solves;
  Index requested = 0;
  bool deflated = false;              // rank() < requested
  Index rank() const { return v.cols(); }
};

// Pairs the two Krylov operators of a descriptor model:
//   forward  x -> A^-1 E x   (one A-solve per column)
//   backward x -> E^-1 A x   (one E-solve per column)
// plus the seed block A^-1 B.  Constructed per engine invocation so the solve
// tallies are attributable; the underlying factorizations are shared and
// read-only, so several pairs may run concurrently.
class OperatorPair {
 public:
  OperatorPair(const DescriptorOps& ops, const DenseBlock& input);

  Index order() const { return ops_->order(); }
  Index width() const { return seed_.cols(); }
  const DenseBlock& seed() const { return seed_; }
  DenseBlock apply_forward(const DenseBlock& x);
  DenseBlock apply_backward(const DenseBlock& x);
  Index nnz_a() const { return ops_->nnz_a(); }
  Index nnz_e() const { return ops_->nnz_e(); }
  const SolveCounts& counts() const { return counts_; }

 private:
  const DescriptorOps* ops_;
  DenseBlock seed_;
  SolveCounts counts_;
};

// Moment-matching basis: the block Krylov space of the forward operator,
// span{A^-1 B, (A^-1 E) A^-1 B, ...}, grown blockwise with deflation until r
// columns (or exhaustion, recorded as deflated).  Never touches E^-1.
ProjectionBasis standard_krylov(OperatorPair& op, Index r, Index ports);

// Extended basis: forward and backward chains grown together, one block of
// each per iteration, starting from [A^-1 B, E^-1 B].  Alternates expansion
// so the truncated basis spans r/2 columns in each direction.
ProjectionBasis compute_eks(OperatorPair& op, Index r, Index ports);

// Asymmetric extended basis: expands the chain whose solves use the sparser
// matrix every iteration and the other chain only every `modulo` iterations,
// so the denser-matrix solve count drops to roughly 1/(modulo+1) of the
// basis size.  modulo == 1 reproduces compute_eks exactly.
ProjectionBasis compute_aeks(OperatorPair& op, Index r, Index ports, Index modulo);

// max |V'V - I|, the orthonormality defect of a basis.
double orthonormality_defect(const DenseBlock& v);

}  // namespace morkit
