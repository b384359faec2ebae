// SPDX-License-Identifier: Apache-2.0
#include "morkit/regularize.hpp"

#include <string>

namespace morkit {

PartitionedMNA partition_mna(const DescriptorSystem& sys, const SingularSplit& split) {
  if (!sys.mna) {
    throw Error(
        "partition: node/branch block structure unavailable; supply the "
        "netlist or a G/C/M/W bundle");
  }
  const MnaBlocks& blk = *sys.mna;
  if (!is_symmetric(blk.G)) {
    throw Error("partition: conductance matrix is not symmetric");
  }
  PartitionedMNA part;
  part.capacitive = split.capacitive;
  part.noncapacitive = split.noncapacitive;
  part.n1 = Index(split.capacitive.size());
  part.n2 = Index(split.noncapacitive.size());
  part.m = blk.M.rows();
  part.p = sys.num_inputs;
  part.q = sys.num_outputs;

  std::vector<Index> all_branches(part.m), all_in(part.p), all_out(part.q);
  for (Index i = 0; i < part.m; ++i) all_branches[i] = i;
  for (Index i = 0; i < part.p; ++i) all_in[i] = i;
  for (Index i = 0; i < part.q; ++i) all_out[i] = i;

  part.G11 = extract_block(blk.G, split.capacitive, split.capacitive);
  part.G12 = extract_block(blk.G, split.capacitive, split.noncapacitive);
  part.G22 = extract_block(blk.G, split.noncapacitive, split.noncapacitive);
  part.W1 = extract_block(blk.W, split.capacitive, all_branches);
  part.W2 = extract_block(blk.W, split.noncapacitive, all_branches);
  part.C1 = extract_block(blk.C, split.capacitive, split.capacitive);
  part.M = blk.M;
  part.B1 = extract_block(blk.B1, split.capacitive, all_in);
  part.B2 = extract_block(blk.B1, split.noncapacitive, all_in);
  part.L1 = extract_block(blk.L1, all_out, split.capacitive);
  part.L2 = extract_block(blk.L1, all_out, split.noncapacitive);
  part.D = sys.D;
  return part;
}

std::pair<DenseBlock, DenseBlock> build_connectivity(const PartitionedMNA& part,
                                                     const Factorization& g22) {
  const Index n1 = part.n1, m = part.m, p = part.p, q = part.q;
  DenseBlock b(n1 + m, p), lt(n1 + m, q);
  if (part.n2 == 0) {
    b.topRows(n1) = to_dense(part.B1);
    b.bottomRows(m).setZero();
    lt.topRows(n1) = to_dense(part.L1).transpose();
    lt.bottomRows(m).setZero();
    return {b, lt};
  }
  // p solves for the input side, q for the output side.
  const DenseBlock y_b = g22.solve(to_dense(part.B2));                          // G22^-1 B2
  const DenseBlock y_l = g22.solve(DenseBlock(to_dense(part.L2).transpose()));  // G22^-1 L2'
  b.topRows(n1) = to_dense(part.B1) - part.G12 * y_b;
  b.bottomRows(m) = part.W2.transpose() * y_b;
  lt.topRows(n1) = to_dense(part.L1).transpose() - part.G12 * y_l;
  lt.bottomRows(m) = -(part.W2.transpose() * y_l);
  return {b, lt};
}

RegularizedSystem::RegularizedSystem(PartitionedMNA part) : part_(std::move(part)) {
  const Index n1 = part_.n1, n2 = part_.n2, m = part_.m;

  std::vector<Triplet> te;
  append_block(te, part_.C1, 0, 0);
  append_block(te, part_.M, n1, n1);
  e_ = sparse_from_triplets(n1 + m, n1 + m, std::move(te));

  if (n2 > 0) {
    try {
      g22_ = Factorization(part_.G22);
    } catch (const SingularMatrix& e) {
      throw SingularG22(
          std::string("regularize: the non-capacitive node block has no "
                      "resistive tie to the rest of the net (") +
          e.what() + ")");
    }
  }

  // Bordered matrix for solves with A, factored once:
  //   [[-G11, -W1, -G12], [W1', 0, W2'], [-G12', -W2, -G22]]
  std::vector<Triplet> taug;
  append_block(taug, part_.G11, 0, 0, -1.0);
  append_block(taug, part_.W1, 0, n1, -1.0);
  append_block(taug, part_.G12, 0, n1 + m, -1.0);
  append_block(taug, part_.W1, n1, 0, 1.0, /*transposed=*/true);
  append_block(taug, part_.W2, n1, n1 + m, 1.0, /*transposed=*/true);
  append_block(taug, part_.G12, n1 + m, 0, -1.0, /*transposed=*/true);
  append_block(taug, part_.W2, n1 + m, n1, -1.0);
  append_block(taug, part_.G22, n1 + m, n1 + m, -1.0);
  const SparseMatrix aug = sparse_from_triplets(n1 + m + n2, n1 + m + n2, std::move(taug));
  aug_nnz_ = aug.nonZeros();
  aug_ = Factorization(aug);

  auto [b, lt] = build_connectivity(part_, g22_);
  b_ = std::move(b);
  lt_ = std::move(lt);

  if (n2 > 0) {
    d_ = to_dense(part_.L2) * g22_.solve(to_dense(part_.B2)) + part_.D;
  } else {
    d_ = part_.D;
  }
}

DenseBlock RegularizedSystem::solve_a(const DenseBlock& rhs) const {
  const Index nr = part_.n1 + part_.m;
  if (rhs.rows() != nr) {
    throw DimensionMismatch("solve_a: rhs has " + std::to_string(rhs.rows()) +
                            " rows, expected " + std::to_string(nr));
  }
  DenseBlock full = DenseBlock::Zero(nr + part_.n2, rhs.cols());
  full.topRows(nr) = rhs;
  return aug_.solve(full).topRows(nr);
}

DenseBlock RegularizedSystem::apply_a(const DenseBlock& x) const {
  const Index n1 = part_.n1, m = part_.m;
  if (x.rows() != n1 + m) {
    throw DimensionMismatch("apply_a: input has " + std::to_string(x.rows()) +
                            " rows, expected " + std::to_string(n1 + m));
  }
  const auto x1 = x.topRows(n1);
  const auto x2 = x.bottomRows(m);
  DenseBlock out(n1 + m, x.cols());
  out.topRows(n1) = -(part_.G11 * x1) - part_.W1 * x2;
  out.bottomRows(m) = part_.W1.transpose() * x1;
  if (part_.n2 > 0) {
    // Low-rank correction [-G12; W2'] G22^-1 [-G12', -W2] x.
    DenseBlock s = -(part_.G12.transpose() * x1) - part_.W2 * x2;
    const DenseBlock v = g22_.solve(s);
    out.topRows(n1) -= part_.G12 * v;
    out.bottomRows(m) += part_.W2.transpose() * v;
  }
  return out;
}

DenseBlock RegularizedSystem::dense_a(Index cap, bool left_solves) const {
  const Index n1 = part_.n1, m = part_.m;
  if (n1 + m > cap) {
    throw CapExceeded("dense_a: order " + std::to_string(n1 + m) +
                      " exceeds cap " + std::to_string(cap));
  }
  DenseBlock a(n1 + m, n1 + m);
  a.topLeftCorner(n1, n1) = -to_dense(part_.G11);
  a.topRightCorner(n1, m) = -to_dense(part_.W1);
  a.bottomLeftCorner(m, n1) = to_dense(part_.W1).transpose();
  a.bottomRightCorner(m, m).setZero();
  if (part_.n2 == 0) return a;

  const DenseBlock g12t = to_dense(part_.G12).transpose();  // n2 x n1
  const DenseBlock w2 = to_dense(part_.W2);                 // n2 x m
  DenseBlock p_gg, p_gw, p_wg, p_ww;
  if (left_solves) {
    // Rows of G12 G22^-1 and W2' G22^-1 from transposed solves, then two
    // sparse products each.
    const DenseBlock z1 = g22_.solve_transposed(g12t).transpose();  // n1 x n2
    const DenseBlock z2 = g22_.solve_transposed(w2).transpose();    // m x n2
    p_gg = z1 * g12t;
    p_gw = z1 * w2;
    p_wg = z2 * g12t;
    p_ww = z2 * w2;
  } else {
    const DenseBlock y1 = g22_.solve(g12t);  // G22^-1 G12'
    const DenseBlock y2 = g22_.solve(w2);    // G22^-1 W2
    p_gg = part_.G12 * y1;
    p_gw = part_.G12 * y2;
    p_wg = part_.W2.transpose() * y1;
    p_ww = part_.W2.transpose() * y2;
  }
  a.topLeftCorner(n1, n1) += p_gg;
  a.topRightCorner(n1, m) += p_gw;
  a.bottomLeftCorner(m, n1) -= p_wg;
  a.bottomRightCorner(m, m) -= p_ww;
  return a;
}

DenseBlock RegularizedSystem::recover_interior(const DenseBlock& x,
                                               const DenseBlock& u) const {
  const Index n1 = part_.n1, m = part_.m;
  if (x.rows() != n1 + m) {
    throw DimensionMismatch("recover_interior: state block has wrong row count");
  }
  if (u.rows() != part_.p || u.cols() != x.cols()) {
    throw DimensionMismatch("recover_interior: input block shape mismatch");
  }
  if (part_.n2 == 0) return DenseBlock(0, x.cols());
  DenseBlock rhs = part_.B2 * u - part_.G12.transpose() * x.topRows(n1) -
                   part_.W2 * x.bottomRows(m);
  return g22_.solve(rhs);
}

}  // namespace morkit
