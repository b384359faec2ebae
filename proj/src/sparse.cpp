// SPDX-License-Identifier: Apache-2.0
#include "morkit/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace morkit {

namespace {

// Pivots at or below this fraction of the matrix magnitude count as singular.
constexpr double kPivotTol = 1e-14;

// Deterministic probe vector, |.|_inf = 1.  Solving against it exposes the
// solution growth ~ 1/|smallest pivot| that a numerically singular LU shows.
Eigen::VectorXd probe_vector(Index n) {
  std::mt19937_64 gen(0x9e3779b97f4a7c15ull);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) {
    v(i) = 2.0 * ((gen() >> 11) * 0x1.0p-53) - 1.0;
  }
  const double m = v.cwiseAbs().maxCoeff();
  if (m > 0) v /= m;
  return v;
}

}  // namespace

double max_abs(const SparseMatrix& m) {
  double r = 0;
  for (Index k = 0; k < m.nonZeros(); ++k) {
    r = std::max(r, std::abs(m.valuePtr()[k]));
  }
  return r;
}

double max_abs(const DenseBlock& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double max_abs(const ComplexBlock& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

SparseMatrix sparse_from_triplets(Index rows, Index cols, std::vector<Triplet> ts) {
  std::sort(ts.begin(), ts.end(), [](const Triplet& a, const Triplet& b) {
    if (a.row() != b.row()) return a.row() < b.row();
    if (a.col() != b.col()) return a.col() < b.col();
    return a.value() < b.value();
  });
  std::vector<Triplet> merged;
  merged.reserve(ts.size());
  for (std::size_t i = 0; i < ts.size();) {
    const Index r = ts[i].row(), c = ts[i].col();
    double sum = 0;
    for (; i < ts.size() && ts[i].row() == r && ts[i].col() == c; ++i) {
      sum += ts[i].value();
    }
    if (sum != 0.0) merged.emplace_back(r, c, sum);
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(merged.begin(), merged.end());
  m.makeCompressed();
  return m;
}

void append_block(std::vector<Triplet>& out, const SparseMatrix& block, Index r0,
                  Index c0, double scale, bool transposed) {
  for (Index i = 0; i < block.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(block, i); it; ++it) {
      const Index r = transposed ? it.col() : it.row();
      const Index c = transposed ? it.row() : it.col();
      out.emplace_back(r0 + r, c0 + c, scale * it.value());
    }
  }
}

SparseMatrix extract_block(const SparseMatrix& m, const std::vector<Index>& rows,
                           const std::vector<Index>& cols) {
  std::vector<Index> rmap(m.rows(), -1), cmap(m.cols(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) rmap[rows[i]] = Index(i);
  for (std::size_t j = 0; j < cols.size(); ++j) cmap[cols[j]] = Index(j);
  std::vector<Triplet> ts;
  for (Index i = 0; i < m.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
      const Index r = rmap[it.row()], c = cmap[it.col()];
      if (r >= 0 && c >= 0) ts.emplace_back(r, c, it.value());
    }
  }
  return sparse_from_triplets(Index(rows.size()), Index(cols.size()), std::move(ts));
}

DenseBlock to_dense(const SparseMatrix& m) { return DenseBlock(m); }

bool is_symmetric(const SparseMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  SparseMatrix d = SparseMatrix(m.transpose()) - m;
  return max_abs(d) <= rel_tol * std::max(1.0, max_abs(m));
}

Factorization::Factorization(const SparseMatrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("factorize: matrix must be square");
  }
  n_ = a.rows();
  if (n_ == 0) return;
  const double amax = max_abs(a);
  if (amax == 0.0) throw SingularMatrix("factorize: zero matrix");
  auto lu = std::make_shared<Eigen::SparseLU<SparseMatrixCol>>();
  SparseMatrixCol ac(a);
  ac.makeCompressed();
  lu->compute(ac);
  if (lu->info() != Eigen::Success) {
    throw SingularMatrix("factorize: " + lu->lastErrorMessage());
  }
  // SparseLU only rejects exactly-zero pivots; detect near-zero pivots by the
  // solution growth they induce, scaled so the check is invariant under
  // A -> c*A.  Growth beyond 1/kPivotTol marks the matrix singular.
  const Eigen::VectorXd probe = probe_vector(n_);
  const Eigen::VectorXd y = lu->solve(probe);
  if (!y.allFinite() || y.cwiseAbs().maxCoeff() * amax * kPivotTol > 1.0) {
    throw SingularMatrix("factorize: matrix is numerically singular");
  }
  lu_ = std::move(lu);
}

DenseBlock Factorization::solve(const DenseBlock& rhs) const {
  if (rhs.rows() != n_) {
    throw DimensionMismatch("solve: rhs has " + std::to_string(rhs.rows()) +
                            " rows, expected " + std::to_string(n_));
  }
  if (n_ == 0) return rhs;
  return lu_->solve(rhs);
}

DenseBlock Factorization::solve_transposed(const DenseBlock& rhs) const {
  if (rhs.rows() != n_) {
    throw DimensionMismatch("solve_transposed: rhs has " + std::to_string(rhs.rows()) +
                            " rows, expected " + std::to_string(n_));
  }
  if (n_ == 0) return rhs;
  return lu_->transpose().solve(rhs);
}

ComplexFactorization::ComplexFactorization(const ComplexSparseCol& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("factorize: matrix must be square");
  }
  n_ = a.rows();
  if (n_ == 0) return;
  double amax = 0;
  for (Index k = 0; k < a.nonZeros(); ++k) {
    amax = std::max(amax, std::abs(a.valuePtr()[k]));
  }
  if (amax == 0.0) throw SingularMatrix("factorize: zero matrix");
  auto lu = std::make_shared<Eigen::SparseLU<ComplexSparseCol>>();
  lu->compute(a);
  if (lu->info() != Eigen::Success) {
    throw SingularMatrix("factorize: " + lu->lastErrorMessage());
  }
  const Eigen::VectorXcd probe = probe_vector(n_).cast<Complex>();
  const Eigen::VectorXcd y = lu->solve(probe);
  if (!y.allFinite() || y.cwiseAbs().maxCoeff() * amax * kPivotTol > 1.0) {
    throw SingularMatrix("factorize: matrix is numerically singular");
  }
  lu_ = std::move(lu);
}

ComplexBlock ComplexFactorization::solve(const ComplexBlock& rhs) const {
  if (rhs.rows() != n_) {
    throw DimensionMismatch("solve: rhs has " + std::to_string(rhs.rows()) +
                            " rows, expected " + std::to_string(n_));
  }
  if (n_ == 0) return rhs;
  return lu_->solve(rhs);
}

QrResult qr_mgs(const DenseBlock& x, double rank_tol) {
  Eigen::VectorXd refs = x.colwise().norm();
  return qr_mgs(x, rank_tol, refs);
}

QrResult qr_mgs(const DenseBlock& x, double rank_tol, const Eigen::VectorXd& ref_norms) {
  if (x.cols() > x.rows()) {
    throw DimensionMismatch("qr_mgs: more columns than rows");
  }
  if (ref_norms.size() != x.cols()) {
    throw DimensionMismatch("qr_mgs: reference norm count mismatch");
  }
  const Index n = x.rows(), c = x.cols();
  DenseBlock q(n, c);
  std::vector<Index> kept;
  for (Index j = 0; j < c; ++j) {
    Eigen::VectorXd v = x.col(j);
    double before = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < Index(kept.size()); ++i) {
        v.noalias() -= q.col(i) * q.col(i).dot(v);
      }
      const double after = v.norm();
      if (after >= before * kReorthFactor) break;
      before = after;
    }
    const double norm = v.norm();
    if (!(norm > rank_tol * ref_norms(j))) continue;  // dependent or zero column
    q.col(Index(kept.size())) = v / norm;
    kept.push_back(j);
  }
  QrResult r;
  r.q = q.leftCols(Index(kept.size()));
  r.kept = std::move(kept);
  return r;
}

DenseBlock orth_against(const DenseBlock& block, const DenseBlock& basis, Index ports) {
  if (block.cols() == 0 || basis.cols() == 0) return block;
  if (block.rows() != basis.rows()) {
    throw DimensionMismatch("orth_against: row count mismatch");
  }
  const Index w = std::max<Index>(1, 2 * ports);
  auto project = [&](DenseBlock& t) {
    for (Index s = 0; s < basis.cols(); s += w) {
      const Index bw = std::min(w, basis.cols() - s);
      const auto blk = basis.middleCols(s, bw);
      t.noalias() -= blk * (blk.transpose() * t);
    }
  };
  DenseBlock out = block;
  const Eigen::VectorXd before = out.colwise().norm();
  project(out);
  std::vector<Index> redo;
  for (Index j = 0; j < out.cols(); ++j) {
    if (out.col(j).norm() < before(j) * kReorthFactor) redo.push_back(j);
  }
  if (!redo.empty()) {
    DenseBlock sub(out.rows(), Index(redo.size()));
    for (Index k = 0; k < Index(redo.size()); ++k) sub.col(k) = out.col(redo[k]);
    project(sub);
    for (Index k = 0; k < Index(redo.size()); ++k) out.col(redo[k]) = sub.col(k);
  }
  return out;
}

}  // namespace morkit
