// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "morkit/mna.hpp"
#include "morkit/reduce.hpp"
#include "morkit/types.hpp"

namespace morkit {

// Matrix Market coordinate real, general or symmetric storage.  Reading sums
// duplicate entries, drops entries whose final value is exactly zero, and
// mirrors symmetric files.  Writing uses 17 significant digits so a
// write/read round trip is value-identical.
SparseMatrix read_matrix_market(const std::filesystem::path& path);
void write_matrix_market(const SparseMatrix& m, const std::filesystem::path& path);

// Directory bundle described by bundle.json.  Two layouts are accepted:
// descriptor matrices {E, A} directly, or MNA blocks {G, C, M, W} that are
// assembled into the standard descriptor form.  B and L are required, D is
// optional.  Unknown manifest keys are rejected.
struct BundleManifest {
  int version = 1;
  std::map<std::string, std::string> matrices;  // role -> filename
  Index order = 0;
  Index nodes = -1;  // -1 when not declared
  Index inputs = 0;
  Index outputs = 0;
  std::vector<std::string> ports;
};

BundleManifest read_manifest(const std::filesystem::path& dir);
DescriptorSystem read_bundle(const std::filesystem::path& dir);
void write_bundle(const DescriptorSystem& sys, const std::filesystem::path& dir);
void write_bundle(const ReducedModel& rom, const std::filesystem::path& dir);

// CSV layout: omega, then re/im/mag columns for every (output, input) pair in
// output-major order.  Points whose solve hit a pole are written as nan and
// come back flagged as skipped.
void write_sweep_csv(const FrequencySweep& sweep, const std::filesystem::path& path);
FrequencySweep read_sweep_csv(const std::filesystem::path& path);

// Reproducible run summary.  Wall-clock timings live in a separate file so
// the report itself is byte-identical across runs of the same config.
struct RunReport {
  std::string command;
  std::string input;
  std::string method;
  Index order = 0;
  Index modulo = 0;  // 0 when not applicable
  Index workers = 0;
  std::uint64_t seed = 0;
  Index source_order = 0;
  Index node_count = 0;
  Index inputs = 0;
  Index outputs = 0;
  bool regularized = false;
  Index eliminated_nodes = 0;
  double sweep_min = 0.0;
  double sweep_max = 0.0;
  Index sweep_points = 0;
  double max_error = 0.0;
  std::vector<double> per_port_error;
  SolveCounts solves;
  std::vector<SolveCounts> per_port_solves;
  std::vector<std::vector<BlockRecord>> schedules;
  bool deflated = false;
  std::vector<std::string> warnings;
};

void write_report_json(const RunReport& report, const std::filesystem::path& path);
void write_timings_json(const std::vector<std::pair<std::string, double>>& seconds,
                        const std::filesystem::path& path);

}  // namespace morkit
