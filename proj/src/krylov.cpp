// SPDX-License-Identifier: Apache-2.0
#include "morkit/krylov.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace morkit {

namespace {

// Column range of the live end of an expansion chain within the basis.
struct ChainHead {
  Index start = 0;
  Index width = 0;
};

struct SubBlock {
  Direction dir;
  Index width = 0;
};

// Orthogonalizes a candidate block (laid out as the concatenation of `parts`)
// against the current basis, deflates, appends what survives, and records one
// schedule entry per part.  Returns the kept column range of each part.
// Deflation thresholds use the candidates' pre-projection norms so a column
// annihilated by the projection cannot be normalized back out of noise.
std::vector<ChainHead> append_candidates(DenseBlock& v,
                                         std::vector<BlockRecord>& schedule,
                                         const DenseBlock& cand,
                                         const std::vector<SubBlock>& parts,
                                         Index ports) {
  const Eigen::VectorXd refs = cand.colwise().norm();
  const DenseBlock projected = orth_against(cand, v, ports);
  const QrResult qr = qr_mgs(projected, kRankTol, refs);

  // MGS keeps columns in order, so each part's survivors are contiguous.
  std::vector<Index> kept_per_part(parts.size(), 0);
  {
    Index bound = 0;
    std::size_t part = 0;
    std::vector<Index> bounds;
    for (const SubBlock& sb : parts) {
      bound += sb.width;
      bounds.push_back(bound);
    }
    for (Index src : qr.kept) {
      while (src >= bounds[part]) ++part;
      ++kept_per_part[part];
    }
  }

  const Index base = v.cols();
  if (qr.rank() > 0) {
    v.conservativeResize(Eigen::NoChange, base + qr.rank());
    v.rightCols(qr.rank()) = qr.q;
  }
  std::vector<ChainHead> heads;
  Index at = base;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    schedule.push_back({parts[i].dir, parts[i].width, kept_per_part[i], at});
    heads.push_back({at, kept_per_part[i]});
    at += kept_per_part[i];
  }
  return heads;
}

// Drops trailing columns beyond r and shrinks the trailing schedule entries
// to match, so the kept widths always sum to the final rank.
void truncate_basis(ProjectionBasis& basis, Index r) {
  if (basis.v.cols() <= r) return;
  Index excess = basis.v.cols() - r;
  basis.v = DenseBlock(basis.v.leftCols(r));
  for (auto it = basis.schedule.rbegin(); it != basis.schedule.rend() && excess > 0; ++it) {
    const Index cut = std::min(excess, it->kept_cols);
    it->kept_cols -= cut;
    excess -= cut;
  }
}

// Requests beyond the model order are legal: the chains exhaust once the
// basis spans the whole space and the result comes back flagged deflated.
void validate_request(const OperatorPair& op, Index r, Index ports, Index min_blocks) {
  if (ports != op.width()) {
    throw DimensionMismatch("subspace engine: ports != operator input width");
  }
  if (r < min_blocks * ports) {
    throw DimensionMismatch("subspace engine: order " + std::to_string(r) +
                            " is below the " + std::to_string(min_blocks * ports) +
                            "-column seed");
  }
}

}  // namespace

OperatorPair::OperatorPair(const DescriptorOps& ops, const DenseBlock& input)
    : ops_(&ops) {
  if (input.rows() != ops.order()) {
    throw DimensionMismatch("operator pair: input row count mismatch");
  }
  if (input.cols() < 1) {
    throw DimensionMismatch("operator pair: need at least one input column");
  }
  seed_ = ops_->solve_a(input);
  counts_.with_a += input.cols();
}

DenseBlock OperatorPair::apply_forward(const DenseBlock& x) {
  counts_.with_a += x.cols();
  return ops_->solve_a(ops_->apply_e(x));
}

DenseBlock OperatorPair::apply_backward(const DenseBlock& x) {
  counts_.with_e += x.cols();
  return ops_->solve_e(ops_->apply_a(x));
}

ProjectionBasis standard_krylov(OperatorPair& op, Index r, Index ports) {
  validate_request(op, r, ports, 1);
  ProjectionBasis basis;
  basis.requested = r;
  DenseBlock v(op.order(), 0);

  auto heads = append_candidates(v, basis.schedule, op.seed(),
                                 {{Direction::Forward, ports}}, ports);
  ChainHead head = heads[0];
  while (v.cols() < r && head.width > 0) {
    const DenseBlock cand = op.apply_forward(v.middleCols(head.start, head.width));
    heads = append_candidates(v, basis.schedule, cand,
                              {{Direction::Forward, head.width}}, ports);
    head = heads[0];
  }
  basis.v = std::move(v);
  truncate_basis(basis, r);
  basis.deflated = basis.v.cols() < r;
  basis.solves = op.counts();
  return basis;
}

ProjectionBasis compute_eks(OperatorPair& op, Index r, Index ports) {
  validate_request(op, r, ports, 2);
  ProjectionBasis basis;
  basis.requested = r;
  DenseBlock v(op.order(), 0);

  DenseBlock init(op.order(), 2 * ports);
  init.leftCols(ports) = op.seed();
  init.rightCols(ports) = op.apply_backward(op.seed());
  auto heads = append_candidates(
      v, basis.schedule, init,
      {{Direction::Forward, ports}, {Direction::Backward, ports}}, ports);
  ChainHead fwd = heads[0], bwd = heads[1];

  while (v.cols() < r && (fwd.width > 0 || bwd.width > 0)) {
    DenseBlock cand(op.order(), fwd.width + bwd.width);
    std::vector<SubBlock> parts;
    if (fwd.width > 0) {
      cand.leftCols(fwd.width) = op.apply_forward(v.middleCols(fwd.start, fwd.width));
      parts.push_back({Direction::Forward, fwd.width});
    }
    if (bwd.width > 0) {
      cand.rightCols(bwd.width) = op.apply_backward(v.middleCols(bwd.start, bwd.width));
      parts.push_back({Direction::Backward, bwd.width});
    }
    heads = append_candidates(v, basis.schedule, cand, parts, ports);
    std::size_t at = 0;
    if (fwd.width > 0) fwd = heads[at++];
    if (bwd.width > 0) bwd = heads[at++];
  }
  basis.v = std::move(v);
  truncate_basis(basis, r);
  basis.deflated = basis.v.cols() < r;
  basis.solves = op.counts();
  return basis;
}

ProjectionBasis compute_aeks(OperatorPair& op, Index r, Index ports, Index modulo) {
  if (modulo < 1) throw DimensionMismatch("aeks: modulo must be >= 1");
  validate_request(op, r, ports, 2);
  ProjectionBasis basis;
  basis.requested = r;
  DenseBlock v(op.order(), 0);

  // The cheap ("sparse") chain is the one whose per-column solve touches the
  // sparser matrix; ties go to the backward chain, whose solves use E.
  const bool backward_cheap = op.nnz_e() <= op.nnz_a();
  const Direction sparse_dir = backward_cheap ? Direction::Backward : Direction::Forward;
  const Direction dense_dir = backward_cheap ? Direction::Forward : Direction::Backward;

  // Seed with one block of each chain, costly-direction block first so the
  // head bookkeeping is uniform: [dense-chain head | sparse-chain head].
  DenseBlock init(op.order(), 2 * ports);
  const DenseBlock seed_bwd = op.apply_backward(op.seed());
  if (backward_cheap) {
    init.leftCols(ports) = op.seed();
    init.rightCols(ports) = seed_bwd;
  } else {
    init.leftCols(ports) = seed_bwd;
    init.rightCols(ports) = op.seed();
  }
  const std::vector<SubBlock> init_parts = {{dense_dir, ports}, {sparse_dir, ports}};
  auto heads = append_candidates(v, basis.schedule, init, init_parts, ports);
  ChainHead dense_head = heads[0], sparse_head = heads[1];

  auto extend = [&](Direction dir, const ChainHead& head) {
    return dir == Direction::Forward
               ? op.apply_forward(v.middleCols(head.start, head.width))
               : op.apply_backward(v.middleCols(head.start, head.width));
  };

  Index j = 1;
  while (v.cols() < r && (dense_head.width > 0 || sparse_head.width > 0)) {
    if (j % modulo != 0) {
      // Sparse-only iteration: one block along the cheap chain.
      if (sparse_head.width > 0) {
        const DenseBlock cand = extend(sparse_dir, sparse_head);
        heads = append_candidates(v, basis.schedule, cand,
                                  {{sparse_dir, sparse_head.width}}, ports);
        sparse_head = heads[0];
      } else if (dense_head.width == 0) {
        break;  // nothing left to expand
      }
    } else {
      // Every modulo-th iteration also advances the costly chain.
      DenseBlock cand(op.order(), dense_head.width + sparse_head.width);
      std::vector<SubBlock> parts;
      if (dense_head.width > 0) {
        cand.leftCols(dense_head.width) = extend(dense_dir, dense_head);
        parts.push_back({dense_dir, dense_head.width});
      }
      if (sparse_head.width > 0) {
        cand.rightCols(sparse_head.width) = extend(sparse_dir, sparse_head);
        parts.push_back({sparse_dir, sparse_head.width});
      }
      if (parts.empty()) break;
      heads = append_candidates(v, basis.schedule, cand, parts, ports);
      std::size_t at = 0;
      if (dense_head.width > 0) dense_head = heads[at++];
      if (sparse_head.width > 0) sparse_head = heads[at++];
    }
    ++j;
  }
  basis.v = std::move(v);
  truncate_basis(basis, r);
  basis.deflated = basis.v.cols() < r;
  basis.solves = op.counts();
  return basis;
}

double orthonormality_defect(const DenseBlock& v) {
  if (v.cols() == 0) return 0.0;
  const DenseBlock g = v.transpose() * v - DenseBlock::Identity(v.cols(), v.cols());
  return max_abs(g);
}

}  // namespace morkit
