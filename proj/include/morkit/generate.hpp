// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "morkit/types.hpp"

namespace morkit {

// Parametric RC/RLC benchmark netlists.  Mesh: a near-square grid of
// resistive (optionally inductive) edges with grounded node capacitors.
// Ladder: a series chain with the same grounding scheme.  Port nodes are
// spread evenly over the net and carry a pad resistor to ground so the
// conductance part stays nonsingular.  `cap_dropout` removes that fraction of
// node capacitors, which makes E structurally singular.  Output is
// byte-identical for identical specs.
enum class Topology { Ladder, Mesh };

struct GridSpec {
  Index nodes = 100;
  Index ports = 1;
  double cap_dropout = 0.0;        // probability a node loses its capacitor
  double inductor_fraction = 0.0;  // probability an edge is an inductor
  Topology topology = Topology::Mesh;
  std::uint64_t seed = 0;
  double r_min = 0.5, r_max = 5.0;     // ohm
  double c_min = 1e-12, c_max = 1e-9;  // farad
  double l_min = 1e-12, l_max = 1e-9;  // henry
};

std::string generate_netlist(const GridSpec& spec);

}  // namespace morkit
