// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "morkit/netlist.hpp"
#include "morkit/types.hpp"

namespace morkit {

// Node/branch-level MNA matrices of an RLC net with n non-ground nodes and m
// inductor branches: conductance G (n x n), capacitance C (n x n), branch
// inductance M (m x m, diagonal), node-to-branch incidence W (n x m), input
// connectivity B1 (n x p) and output selection L1 (q x n).
struct MnaBlocks {
  SparseMatrix G, C, M, W, B1, L1;
};

// First-order descriptor model  E x' = A x + B u,  y = L x + D u  with the
// stacked state x = [node voltages; branch currents]:
//
//   A = [[-G, -W], [W', 0]],   E = [[C, 0], [0, M]],   B = [B1; 0],  L = [L1, 0]
struct DescriptorSystem {
  SparseMatrix E, A, B, L;
  DenseBlock D;                       // q x p feedthrough, zero by default
  Index order = 0;                    // n + m
  Index node_count = 0;               // n
  Index num_inputs = 0;               // p
  Index num_outputs = 0;              // q
  bool singular_e = false;            // some node has no capacitance
  std::optional<MnaBlocks> mna;       // present when block structure is known
  std::vector<std::string> port_names;
  std::vector<std::string> warnings;
};

DescriptorSystem assemble_mna(const Netlist& nl);

// Stacks node/branch blocks into the descriptor form above.  Input and output
// counts come from B1/L1; port names default to p1, p2, ...
DescriptorSystem assemble_descriptor(MnaBlocks blocks, std::vector<std::string> port_names = {});

// Node split driving the regularizer: `capacitive` holds the dense node
// indices whose capacitance row is nonzero, `noncapacitive` the rest (both
// ascending).  Branch rows never appear; M is nonsingular by construction.
struct SingularSplit {
  std::vector<Index> capacitive;
  std::vector<Index> noncapacitive;
};

SingularSplit detect_singularity(const DescriptorSystem& sys);

}  // namespace morkit
