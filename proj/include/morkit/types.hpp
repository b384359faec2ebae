// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace morkit {

using Index = Eigen::Index;
using Complex = std::complex<double>;

// Sparse system matrices are kept row-compressed; dense blocks (Krylov bases,
// reduced models, right-hand sides) are column-major.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseMatrixCol = Eigen::SparseMatrix<double>;
using ComplexSparseCol = Eigen::SparseMatrix<Complex>;
using DenseBlock = Eigen::MatrixXd;
using ComplexBlock = Eigen::MatrixXcd;
using Triplet = Eigen::Triplet<double>;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

class SingularMatrix : public Error {
 public:
  explicit SingularMatrix(const std::string& msg) : Error(msg) {}
};

// The Schur pivot block of a partitioned conductance matrix is singular:
// some non-capacitive node group has no resistive tie to the rest of the net.
class SingularG22 : public SingularMatrix {
 public:
  explicit SingularG22(const std::string& msg) : SingularMatrix(msg) {}
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}
  int line() const { return line_; }

 private:
  int line_;
};

class UnsupportedElement : public ParseError {
 public:
  UnsupportedElement(int line, const std::string& msg) : ParseError(line, msg) {}
};

class ManifestError : public Error {
 public:
  explicit ManifestError(const std::string& msg) : Error(msg) {}
};

class MismatchedSweep : public Error {
 public:
  explicit MismatchedSweep(const std::string& msg) : Error(msg) {}
};

class CapExceeded : public Error {
 public:
  explicit CapExceeded(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Largest absolute entry; 0 for an empty matrix.
double max_abs(const SparseMatrix& m);
double max_abs(const DenseBlock& m);
double max_abs(const ComplexBlock& m);

// Builds a compressed matrix from triplets in a canonical order (sorted by
// row, column, then value before accumulation) so the result is bit-identical
// no matter how the caller interleaved its stamps.  Entries summing to exact
// zero are dropped.
SparseMatrix sparse_from_triplets(Index rows, Index cols, std::vector<Triplet> ts);

// Appends scale * block (optionally transposed) at offset (r0, c0).
void append_block(std::vector<Triplet>& out, const SparseMatrix& block, Index r0,
                  Index c0, double scale = 1.0, bool transposed = false);

// Extracts rows/cols given by index lists (ascending) into a smaller matrix.
SparseMatrix extract_block(const SparseMatrix& m, const std::vector<Index>& rows,
                           const std::vector<Index>& cols);

DenseBlock to_dense(const SparseMatrix& m);

bool is_symmetric(const SparseMatrix& m, double rel_tol = 1e-12);

}  // namespace morkit
