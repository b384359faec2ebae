// SPDX-License-Identifier: Apache-2.0
#include "morkit/reduce.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>
#include <utility>

namespace morkit {

namespace {

ReducedModel project(const DescriptorOps& sys, const ProjectionBasis& basis, Method method,
                     const DenseBlock& input, const DenseBlock& feedthrough) {
  if (basis.rank() == 0) throw Error("projection basis is empty");
  if (basis.v.rows() != sys.order()) throw DimensionMismatch("basis rows do not match system order");
  const DenseBlock& v = basis.v;
  ReducedModel rom;
  rom.e = v.transpose() * sys.apply_e(v);
  rom.a = v.transpose() * sys.apply_a(v);
  rom.b = v.transpose() * input;
  rom.l = (v.transpose() * sys.output_block_t()).transpose();
  rom.d = feedthrough;
  rom.method = method;
  rom.source_order = sys.order();
  rom.schedule = basis.schedule;
  rom.solves = basis.solves;
  rom.deflated = basis.deflated;
  return rom;
}

// Rank-revealing dense factorization; the reduced matrices are small, so the
// extra pivoting cost is negligible and singularity is reported cleanly.
Eigen::FullPivLU<DenseBlock> checked_lu(const DenseBlock& m, const char* what) {
  Eigen::FullPivLU<DenseBlock> lu(m);
  if (!lu.isInvertible()) throw SingularMatrix(std::string(what) + " of the reduced model is singular");
  return lu;
}

ProjectionBasis run_engine(Method method, OperatorPair& op, Index r, Index ports, Index modulo) {
  switch (method) {
    case Method::MM: return standard_krylov(op, r, ports);
    case Method::EKS: return compute_eks(op, r, ports);
    case Method::AEKS: return compute_aeks(op, r, ports, modulo);
  }
  throw Error("unknown reduction method");
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::MM: return "mm";
    case Method::EKS: return "eks";
    case Method::AEKS: return "aeks";
  }
  throw Error("unknown reduction method");
}

Method method_from_name(const std::string& name) {
  if (name == "mm") return Method::MM;
  if (name == "eks") return Method::EKS;
  if (name == "aeks") return Method::AEKS;
  throw Error("unknown reduction method '" + name + "' (expected mm, eks, or aeks)");
}

ReducedModel reduce(const DescriptorOps& sys, const ProjectionBasis& basis, Method method) {
  return project(sys, basis, method, sys.input_block(), sys.feedthrough());
}

FrequencySweep log_sweep(double omega_min, double omega_max, Index count) {
  if (!(omega_min > 0.0) || !(omega_max > 0.0)) throw Error("sweep frequencies must be positive");
  if (count < 1) throw Error("sweep needs at least one point");
  if (count > 1 && !(omega_max > omega_min)) throw Error("sweep range must be increasing");
  FrequencySweep grid;
  grid.points.reserve(static_cast<std::size_t>(count));
  const double lo = std::log10(omega_min);
  const double hi = std::log10(omega_max);
  for (Index k = 0; k < count; ++k) {
    const double t = (count == 1) ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    grid.points.emplace_back(0.0, std::pow(10.0, lo + t * (hi - lo)));
  }
  return grid;
}

FrequencySweep transfer_function(const DescriptorOps& sys, const FrequencySweep& grid) {
  FrequencySweep out;
  out.points = grid.points;
  out.values.reserve(grid.points.size());
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    try {
      out.values.push_back(sys.eval_transfer(grid.points[k]));
    } catch (const PoleHit&) {
      out.skipped.push_back(static_cast<Index>(k));
      out.values.emplace_back(ComplexBlock::Constant(sys.num_outputs(), sys.num_inputs(),
                                                     Complex(std::numeric_limits<double>::quiet_NaN(), 0.0)));
    }
  }
  return out;
}

FrequencySweep transfer_function(const ReducedModel& rom, const FrequencySweep& grid) {
  FrequencySweep out;
  out.points = grid.points;
  out.values.reserve(grid.points.size());
  const ComplexBlock ec = rom.e.cast<Complex>();
  const ComplexBlock ac = rom.a.cast<Complex>();
  const ComplexBlock bc = rom.b.cast<Complex>();
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    const ComplexBlock lhs = grid.points[k] * ec - ac;
    Eigen::PartialPivLU<ComplexBlock> lu(lhs);
    const ComplexBlock x = lu.solve(bc);
    if (!x.allFinite()) {
      out.skipped.push_back(static_cast<Index>(k));
      out.values.emplace_back(ComplexBlock::Constant(rom.l.rows(), rom.b.cols(),
                                                     Complex(std::numeric_limits<double>::quiet_NaN(), 0.0)));
      continue;
    }
    out.values.emplace_back(rom.l.cast<Complex>() * x + rom.d.cast<Complex>());
  }
  return out;
}

std::vector<DenseBlock> moments(const DescriptorOps& sys, Index count) {
  std::vector<DenseBlock> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  const DenseBlock lt = sys.output_block_t();
  DenseBlock x = sys.solve_a(sys.input_block());
  for (Index i = 0; i < count; ++i) {
    DenseBlock m = -(lt.transpose() * x);
    if (i == 0) m += sys.feedthrough();
    out.push_back(std::move(m));
    if (i + 1 < count) x = sys.solve_a(sys.apply_e(x));
  }
  return out;
}

std::vector<DenseBlock> moments(const ReducedModel& rom, Index count) {
  std::vector<DenseBlock> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  const auto lu = checked_lu(rom.a, "A");
  DenseBlock x = lu.solve(rom.b);
  for (Index i = 0; i < count; ++i) {
    DenseBlock m = -(rom.l * x);
    if (i == 0) m += rom.d;
    out.push_back(std::move(m));
    if (i + 1 < count) x = lu.solve(rom.e * x);
  }
  return out;
}

std::vector<DenseBlock> markov_parameters(const DescriptorOps& sys, Index count) {
  std::vector<DenseBlock> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  const DenseBlock lt = sys.output_block_t();
  DenseBlock y = sys.solve_e(sys.input_block());
  for (Index i = 0; i < count; ++i) {
    out.push_back(lt.transpose() * y);
    if (i + 1 < count) y = sys.solve_e(sys.apply_a(y));
  }
  return out;
}

std::vector<DenseBlock> markov_parameters(const ReducedModel& rom, Index count) {
  std::vector<DenseBlock> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  const auto lu = checked_lu(rom.e, "E");
  DenseBlock y = lu.solve(rom.b);
  for (Index i = 0; i < count; ++i) {
    out.push_back(rom.l * y);
    if (i + 1 < count) y = lu.solve(rom.a * y);
  }
  return out;
}

double max_error(const FrequencySweep& ref, const FrequencySweep& approx) {
  if (ref.points.size() != approx.points.size())
    throw MismatchedSweep("sweeps have different point counts");
  for (std::size_t k = 0; k < ref.points.size(); ++k)
    if (ref.points[k] != approx.points[k])
      throw MismatchedSweep("sweeps were evaluated on different point sets");
  if (ref.values.size() != ref.points.size() || approx.values.size() != approx.points.size())
    throw MismatchedSweep("sweep has not been evaluated");
  std::vector<bool> skip(ref.points.size(), false);
  for (Index k : ref.skipped) skip[static_cast<std::size_t>(k)] = true;
  for (Index k : approx.skipped) skip[static_cast<std::size_t>(k)] = true;
  double err = 0.0;
  for (std::size_t k = 0; k < ref.points.size(); ++k) {
    if (skip[k]) continue;
    if (ref.values[k].rows() != approx.values[k].rows() || ref.values[k].cols() != approx.values[k].cols())
      throw MismatchedSweep("sweep value blocks have different shapes");
    err = std::max(err, (ref.values[k] - approx.values[k]).cwiseAbs().maxCoeff());
  }
  return err;
}

std::vector<DescriptorSystem> simo_split(const DescriptorSystem& sys) {
  std::vector<DescriptorSystem> out;
  out.reserve(static_cast<std::size_t>(sys.num_inputs));
  const SparseMatrixCol b_cols(sys.B);
  for (Index i = 0; i < sys.num_inputs; ++i) {
    DescriptorSystem sub = sys;
    sub.B = SparseMatrix(b_cols.col(i));
    sub.D = sys.D.col(i);
    sub.num_inputs = 1;
    if (!sys.port_names.empty()) sub.port_names = {sys.port_names[static_cast<std::size_t>(i)]};
    if (sys.mna) {
      sub.mna->B1 = SparseMatrix(SparseMatrixCol(sys.mna->B1).col(i));
    }
    out.push_back(std::move(sub));
  }
  return out;
}

PerPortResult reduce_per_port(const DescriptorOps& sys, Method method, Index r,
                              Index modulo, const FrequencySweep& grid, Index workers) {
  const Index p = sys.num_inputs();
  if (p <= 0) throw Error("system has no inputs");
  const DenseBlock b = sys.input_block();
  const DenseBlock d = sys.feedthrough();

  if (workers <= 0) workers = static_cast<Index>(std::thread::hardware_concurrency());
  workers = std::clamp<Index>(workers, 1, p);

  PerPortResult result;
  result.models.resize(static_cast<std::size_t>(p));
  std::vector<FrequencySweep> sweeps(static_cast<std::size_t>(p));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(p));
  std::atomic<Index> next{0};

  // Each port writes only its own slot, so the assembled result does not
  // depend on how ports were interleaved across threads.
  auto worker = [&]() {
    for (;;) {
      const Index i = next.fetch_add(1);
      if (i >= p) return;
      const auto slot = static_cast<std::size_t>(i);
      try {
        OperatorPair op(sys, b.col(i));
        const ProjectionBasis basis = run_engine(method, op, r, 1, modulo);
        result.models[slot] = project(sys, basis, method, b.col(i), d.col(i));
        sweeps[slot] = transfer_function(result.models[slot], grid);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (Index t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  result.response.points = grid.points;
  result.response.values.reserve(grid.points.size());
  std::vector<bool> skip(grid.points.size(), false);
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    ComplexBlock block(sys.num_outputs(), p);
    for (Index i = 0; i < p; ++i) block.col(i) = sweeps[static_cast<std::size_t>(i)].values[k].col(0);
    result.response.values.push_back(std::move(block));
  }
  for (const auto& sw : sweeps)
    for (Index k : sw.skipped) skip[static_cast<std::size_t>(k)] = true;
  for (std::size_t k = 0; k < skip.size(); ++k)
    if (skip[k]) result.response.skipped.push_back(static_cast<Index>(k));
  return result;
}

}  // namespace morkit
