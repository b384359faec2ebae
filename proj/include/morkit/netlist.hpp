// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "morkit/types.hpp"

namespace morkit {

// Flat RLC netlist in a SPICE-like dialect:
//
//   R<name> <node+> <node-> <value>     resistor, value in ohms, > 0
//   C<name> <node+> <node-> <value>     capacitor, farads, > 0
//   L<name> <node+> <node-> <value>     inductor, henries, > 0
//   I<name> <node+> <node-> <value>     current source, amperes
//   * comment
//   .port <name> <input-node> [[out] <output-node>]
//
// Nodes are non-negative integers, 0 is ground.  The element letter is case
// insensitive.  Voltage sources are rejected; convert them to their Norton
// equivalents first.  A `.port` directive declares a terminal: one input
// column (unit current injection at the input node) and one output row (the
// voltage at the output node, defaulting to the input node).  When a netlist
// has no `.port` directives the current sources define the terminals instead,
// with the source value as the injection weight.

enum class ElementKind { Resistor, Capacitor, Inductor, CurrentSource };

struct Element {
  ElementKind kind;
  std::string name;   // full token, e.g. "R12"
  int node_pos = 0;   // original ids as written
  int node_neg = 0;
  double value = 0;
};

struct Port {
  std::string name;
  int input_node = 0;   // original id, never ground
  int output_node = 0;
};

struct Netlist {
  std::vector<Element> elements;
  std::vector<Port> ports;          // explicit directives, possibly empty
  std::vector<int> node_ids;        // sorted original non-ground ids
  std::vector<std::string> warnings;

  Index node_count() const { return Index(node_ids.size()); }
  Index branch_count() const;       // number of inductors
  // Dense [0, n) index of an original node id; -1 for ground or unknown.
  Index dense_index(int original_id) const;
};

Netlist parse_netlist(std::istream& in);
Netlist parse_netlist(const std::string& text);
Netlist read_netlist_file(const std::string& path);

}  // namespace morkit
