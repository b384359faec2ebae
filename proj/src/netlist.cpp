// SPDX-License-Identifier: Apache-2.0
#include "morkit/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace morkit {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

int parse_node(const std::string& tok, int lineno) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(lineno, "bad node id '" + tok + "'");
  }
  if (pos != tok.size() || v < 0) {
    throw ParseError(lineno, "bad node id '" + tok + "'");
  }
  return int(v);
}

double parse_value(const std::string& tok, int lineno) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || tok.empty()) {
    throw ParseError(lineno, "bad value '" + tok + "'");
  }
  return v;
}

}  // namespace

Index Netlist::branch_count() const {
  return Index(std::count_if(elements.begin(), elements.end(), [](const Element& e) {
    return e.kind == ElementKind::Inductor;
  }));
}

Index Netlist::dense_index(int original_id) const {
  const auto it = std::lower_bound(node_ids.begin(), node_ids.end(), original_id);
  if (it == node_ids.end() || *it != original_id) return -1;
  return Index(it - node_ids.begin());
}

Netlist parse_netlist(std::istream& in) {
  Netlist nl;
  std::set<std::string> element_names;
  std::set<std::string> port_names;
  std::set<int> nodes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '*') continue;
    const auto toks = tokenize(line);

    if (toks[0][0] == '.') {
      if (lower(toks[0]) != ".port") {
        throw ParseError(lineno, "unknown directive '" + toks[0] + "'");
      }
      if (toks.size() < 3) {
        throw ParseError(lineno, ".port needs a name and an input node");
      }
      Port port;
      port.name = toks[1];
      port.input_node = parse_node(toks[2], lineno);
      std::size_t next = 3;
      if (next < toks.size() && lower(toks[next]) == "out") ++next;
      if (next < toks.size()) {
        port.output_node = parse_node(toks[next], lineno);
        ++next;
      } else {
        port.output_node = port.input_node;
      }
      if (next != toks.size()) {
        throw ParseError(lineno, "trailing tokens after .port directive");
      }
      if (port.input_node == 0 || port.output_node == 0) {
        throw ParseError(lineno, "port terminals cannot sit at ground");
      }
      if (!port_names.insert(port.name).second) {
        throw ParseError(lineno, "duplicate port name '" + port.name + "'");
      }
      nodes.insert(port.input_node);
      nodes.insert(port.output_node);
      nl.ports.push_back(port);
      continue;
    }

    const char kind_char = char(std::toupper(static_cast<unsigned char>(toks[0][0])));
    if (kind_char == 'V') {
      throw UnsupportedElement(
          lineno, "voltage sources are not supported; use a Norton equivalent");
    }
    ElementKind kind;
    switch (kind_char) {
      case 'R': kind = ElementKind::Resistor; break;
      case 'C': kind = ElementKind::Capacitor; break;
      case 'L': kind = ElementKind::Inductor; break;
      case 'I': kind = ElementKind::CurrentSource; break;
      default:
        throw ParseError(lineno, "unknown element '" + toks[0] + "'");
    }
    if (toks.size() != 4) {
      throw ParseError(lineno,
                       "expected '<name> <node+> <node-> <value>', got " +
                           std::to_string(toks.size()) + " tokens");
    }
    Element e;
    e.kind = kind;
    e.name = toks[0];
    e.node_pos = parse_node(toks[1], lineno);
    e.node_neg = parse_node(toks[2], lineno);
    e.value = parse_value(toks[3], lineno);
    if (e.node_pos == e.node_neg) {
      throw ParseError(lineno, "element '" + e.name + "' has identical terminals");
    }
    if (kind != ElementKind::CurrentSource && !(e.value > 0.0)) {
      throw ParseError(lineno, "element '" + e.name + "' needs a positive value");
    }
    if (!element_names.insert(e.name).second) {
      throw ParseError(lineno, "duplicate element name '" + e.name + "'");
    }
    if (e.node_pos != 0) nodes.insert(e.node_pos);
    if (e.node_neg != 0) nodes.insert(e.node_neg);
    nl.elements.push_back(e);
  }

  nl.node_ids.assign(nodes.begin(), nodes.end());

  // Terminals referencing nodes no element touches have a zero conductance
  // row and will make the system singular downstream; warn here.
  std::set<int> touched;
  for (const Element& e : nl.elements) {
    touched.insert(e.node_pos);
    touched.insert(e.node_neg);
  }
  for (int id : nl.node_ids) {
    if (!touched.count(id)) {
      nl.warnings.push_back("floating node " + std::to_string(id) +
                            ": no element attached");
    }
  }
  return nl;
}

Netlist parse_netlist(const std::string& text) {
  std::istringstream ss(text);
  return parse_netlist(ss);
}

Netlist read_netlist_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open netlist '" + path + "'");
  return parse_netlist(in);
}

}  // namespace morkit
