// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "morkit/krylov.hpp"
#include "morkit/mna.hpp"
#include "morkit/system_ops.hpp"
#include "morkit/types.hpp"

namespace morkit {

enum class Method { MM, EKS, AEKS };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// Dense reduced model obtained by one-sided projection with an orthonormal
// basis V:  E~ = V'EV,  A~ = V'AV,  B~ = V'B,  L~ = LV,  D~ = D.
struct ReducedModel {
  DenseBlock e, a, b, l, d;
  Method method = Method::MM;
  Index source_order = 0;
  std::vector<BlockRecord> schedule;
  SolveCounts solves;
  bool deflated = false;
  Index order() const { return e.rows(); }
};

ReducedModel reduce(const DescriptorOps& sys, const ProjectionBasis& basis, Method method);

// Frequency response samples on the imaginary axis, s = j*omega with omega
// strictly increasing.  `values` holds one q x p block per point once a sweep
// has been evaluated; `skipped` lists indices where the shifted solve hit a
// pole (their value blocks are NaN).
struct FrequencySweep {
  std::vector<Complex> points;
  std::vector<ComplexBlock> values;
  std::vector<Index> skipped;
};

FrequencySweep log_sweep(double omega_min, double omega_max, Index count);

FrequencySweep transfer_function(const DescriptorOps& sys, const FrequencySweep& grid);
FrequencySweep transfer_function(const ReducedModel& rom, const FrequencySweep& grid);

// Taylor coefficients of H at s = 0:  M_i = -L (A^-1 E)^i A^-1 B, plus the
// feedthrough on M_0, so that H(s) = sum_i M_i s^i.
std::vector<DenseBlock> moments(const DescriptorOps& sys, Index count);
std::vector<DenseBlock> moments(const ReducedModel& rom, Index count);

// Expansion coefficients at s = infinity:  P_i = L (E^-1 A)^i E^-1 B.
std::vector<DenseBlock> markov_parameters(const DescriptorOps& sys, Index count);
std::vector<DenseBlock> markov_parameters(const ReducedModel& rom, Index count);

// Largest response mismatch: max over sweep points of the max-magnitude entry
// of ref - approx.  Points flagged in either sweep are excluded.
double max_error(const FrequencySweep& ref, const FrequencySweep& approx);

// Splits a p-input model into p single-input subsystems sharing E, A, L.
std::vector<DescriptorSystem> simo_split(const DescriptorSystem& sys);

// Single-input reductions run independently per port (superposition): port i
// gets its own basis from seed A^-1 b_i, its own reduced model, and its own
// response column; the columns concatenate into the full q x p response.
// Ports are distributed over `workers` threads (0 = hardware concurrency,
// always capped at p); the result is identical for any worker count.
struct PerPortResult {
  std::vector<ReducedModel> models;   // one per input column
  FrequencySweep response;            // concatenated q x p per point
};

PerPortResult reduce_per_port(const DescriptorOps& sys, Method method, Index r,
                              Index modulo, const FrequencySweep& grid, Index workers);

}  // namespace morkit
