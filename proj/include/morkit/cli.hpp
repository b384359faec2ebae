// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "morkit/reduce.hpp"
#include "morkit/types.hpp"

namespace morkit {

struct SweepSpec {
  double omega_min = 1.0;
  double omega_max = 1e12;
  Index points = 200;
};

struct RunConfig {
  std::string input;
  Method method = Method::EKS;
  Index order = 8;
  Index modulo = 3;   // aeks only
  SweepSpec sweep;
  Index workers = 0;  // 0 = available parallelism, always capped at the port count
  std::string output_dir;  // empty: $MORKIT_OUTPUT_DIR, then ./runs
  std::uint64_t seed = 0;
};

// Exit codes: 0 success, 1 numerical failure (singular matrix, basis deflated
// to nothing), 2 usage/parse/I-O errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace morkit
