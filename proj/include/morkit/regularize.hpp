// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "morkit/mna.hpp"
#include "morkit/sparse.hpp"
#include "morkit/types.hpp"

namespace morkit {

// MNA blocks permuted so the capacitive nodes (n1 of them) come first, the
// non-capacitive nodes (n2) follow, and the branch currents stay last.  The
// capacitance block is diag(C1, 0) under this ordering by construction.
struct PartitionedMNA {
  SparseMatrix G11, G12, G22;   // n1 x n1, n1 x n2, n2 x n2 (G is symmetric)
  SparseMatrix W1, W2;          // n1 x m, n2 x m
  SparseMatrix C1, M;           // n1 x n1, m x m
  SparseMatrix B1, B2;          // n1 x p, n2 x p
  SparseMatrix L1, L2;          // q x n1, q x n2
  DenseBlock D;                 // q x p
  std::vector<Index> capacitive;     // dense node index -> original position
  std::vector<Index> noncapacitive;
  Index n1 = 0, n2 = 0, m = 0, p = 0, q = 0;
};

PartitionedMNA partition_mna(const DescriptorSystem& sys, const SingularSplit& split);

// Nonsingular reduced-order realization of a partitioned model whose
// capacitance matrix is rank deficient.  The non-capacitive node voltages are
// purely algebraic,
//
//   v2 = G22^-1 (B2 u - G12' v1 - W2 i),
//
// and eliminating them leaves an order n1 + m descriptor model with
//
//   E = diag(C1, M)
//   A = -[[G11 - G12 G22^-1 G12',  W1 - G12 G22^-1 W2 ],
//         [W2' G22^-1 G12' - W1',  W2' G22^-1 W2      ]]
//   B = [B1 - G12 G22^-1 B2;  W2' G22^-1 B2]
//   L = [L1 - L2 G22^-1 G12',  -L2 G22^-1 W2]
//   D = L2 G22^-1 B2 + D
//
// whose transfer function equals the original wherever both are defined.
// A is never formed densely: solves go through a bordered factorization and
// products through the low-rank form A = S + U G22^-1 V with sparse factors.
class RegularizedSystem {
 public:
  explicit RegularizedSystem(PartitionedMNA part);

  Index order() const { return part_.n1 + part_.m; }
  Index num_inputs() const { return part_.p; }
  Index num_outputs() const { return part_.q; }

  const PartitionedMNA& partition() const { return part_; }
  const SparseMatrix& state_e() const { return e_; }
  const DenseBlock& input() const { return b_; }        // (n1+m) x p
  const DenseBlock& output_t() const { return lt_; }    // (n1+m) x q
  const DenseBlock& feedthrough() const { return d_; }  // q x p
  const Factorization& g22() const { return g22_; }

  // A^-1 * rhs via one solve with the bordered matrix
  //   [[-G11, -W1, -G12], [W1', 0, W2'], [-G12', -W2, -G22]],
  // discarding the trailing n2 auxiliary rows of the solution.
  DenseBlock solve_a(const DenseBlock& rhs) const;

  // A * x via the low-rank form: one sparse product, one G22 solve, one
  // sparse correction.  Never densifies A.
  DenseBlock apply_a(const DenseBlock& x) const;

  // Densely assembled A for cross-checks; refuses orders above `cap`.  The
  // Schur products can run through left-solves with G22 (the cheap direction
  // when n2 is small) or right-solves; both must agree.
  DenseBlock dense_a(Index cap = 2000, bool left_solves = true) const;

  // Recovers the eliminated voltages v2 from a state block x = [v1; i] and
  // the matching inputs u (one column per column of x).
  DenseBlock recover_interior(const DenseBlock& x, const DenseBlock& u) const;

  Index nnz_a() const { return aug_nnz_; }  // bordered-solve matrix
  Index nnz_e() const { return e_.nonZeros(); }

 private:
  PartitionedMNA part_;
  Factorization g22_;   // empty when n2 == 0
  Factorization aug_;
  SparseMatrix e_;
  DenseBlock b_, lt_, d_;
  Index aug_nnz_ = 0;
};

// Input/output connectivity of the regularized model: returns (B, L') using
// exactly p + q solves with G22.
std::pair<DenseBlock, DenseBlock> build_connectivity(const PartitionedMNA& part,
                                                     const Factorization& g22);

}  // namespace morkit
