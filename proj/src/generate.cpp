// SPDX-License-Identifier: Apache-2.0
#include "morkit/generate.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

namespace morkit {

namespace {

// mt19937_64 with an explicit bits-to-double mapping; distribution classes
// are implementation-defined and would break byte-identical output across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double log_uniform(double lo, double hi) { return lo * std::pow(hi / lo, u01()); }

 private:
  std::mt19937_64 gen_;
};

std::string fmt12(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void check_spec(const GridSpec& s) {
  if (s.nodes < 2) throw Error("generator needs at least 2 nodes");
  if (s.ports < 1 || s.ports > s.nodes) throw Error("port count must be in [1, nodes]");
  if (!(s.cap_dropout >= 0.0 && s.cap_dropout < 1.0)) throw Error("cap dropout must be in [0, 1)");
  if (!(s.inductor_fraction >= 0.0 && s.inductor_fraction <= 1.0))
    throw Error("inductor fraction must be in [0, 1]");
  for (auto [lo, hi] : {std::pair{s.r_min, s.r_max}, {s.c_min, s.c_max}, {s.l_min, s.l_max}}) {
    if (!(lo > 0.0) || !(hi >= lo)) throw Error("element value ranges must be positive and ordered");
  }
}

std::vector<Index> port_nodes(Index n, Index p) {
  std::vector<Index> out;
  for (Index j = 0; j < p; ++j) {
    out.push_back(p == 1 ? 1 : 1 + (j * (n - 1)) / (p - 1));
  }
  return out;
}

}  // namespace

std::string generate_netlist(const GridSpec& spec) {
  check_spec(spec);
  Rng rng(spec.seed);
  std::ostringstream out;

  const Index n = spec.nodes;
  const bool mesh = spec.topology == Topology::Mesh;
  out << "* " << (mesh ? "mesh" : "ladder") << " nodes=" << n << " ports=" << spec.ports
      << " seed=" << spec.seed << " cap_dropout=" << fmt12(spec.cap_dropout)
      << " inductor_fraction=" << fmt12(spec.inductor_fraction) << "\n";

  Index nr = 0, nl = 0, nc = 0;
  auto edge = [&](Index a, Index b) {
    const bool inductive = rng.u01() < spec.inductor_fraction;
    if (inductive) {
      out << "L" << ++nl << " " << a << " " << b << " " << fmt12(rng.log_uniform(spec.l_min, spec.l_max)) << "\n";
    } else {
      out << "R" << ++nr << " " << a << " " << b << " " << fmt12(rng.log_uniform(spec.r_min, spec.r_max)) << "\n";
    }
  };

  // Nodes are 1..n; the mesh is row-major with width ceil(sqrt(n)), the last
  // row possibly short, so exactly n nodes appear for any request.
  if (mesh) {
    const Index w = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n))));
    for (Index k = 0; k < n; ++k) {
      const Index col = k % w;
      if (col + 1 < w && k + 1 < n) edge(k + 1, k + 2);
      if (k + w < n) edge(k + 1, k + w + 1);
    }
  } else {
    for (Index k = 1; k < n; ++k) edge(k, k + 1);
  }

  const std::vector<Index> pads = port_nodes(n, spec.ports);
  for (Index node : pads) {
    out << "R" << ++nr << " " << node << " 0 " << fmt12(rng.log_uniform(spec.r_min, spec.r_max)) << "\n";
  }

  for (Index k = 1; k <= n; ++k) {
    if (rng.u01() < spec.cap_dropout) continue;
    out << "C" << ++nc << " " << k << " 0 " << fmt12(rng.log_uniform(spec.c_min, spec.c_max)) << "\n";
  }
  if (nc == 0) {
    // Degenerate all-dropped draw: keep one capacitor so the model has state.
    out << "C1 " << pads.front() << " 0 " << fmt12(std::sqrt(spec.c_min * spec.c_max)) << "\n";
  }

  for (std::size_t j = 0; j < pads.size(); ++j) {
    out << ".port p" << (j + 1) << " " << pads[j] << "\n";
  }
  return out.str();
}

}  // namespace morkit
