// SPDX-License-Identifier: Apache-2.0
#include "morkit/mna.hpp"

#include <algorithm>
#include <set>

namespace morkit {

namespace {

// Two-terminal admittance stamp with ground rows/columns dropped.
void stamp_pair(std::vector<Triplet>& ts, Index a, Index b, double v) {
  if (a >= 0) ts.emplace_back(a, a, v);
  if (b >= 0) ts.emplace_back(b, b, v);
  if (a >= 0 && b >= 0) {
    ts.emplace_back(a, b, -v);
    ts.emplace_back(b, a, -v);
  }
}

}  // namespace

DescriptorSystem assemble_mna(const Netlist& nl) {
  const Index n = nl.node_count();
  const Index m = nl.branch_count();

  // Branch indices are assigned by inductor name, not input order, so that
  // reordering netlist lines cannot change the assembled matrices.
  std::vector<const Element*> inductors;
  for (const Element& e : nl.elements) {
    if (e.kind == ElementKind::Inductor) inductors.push_back(&e);
  }
  std::sort(inductors.begin(), inductors.end(),
            [](const Element* a, const Element* b) { return a->name < b->name; });

  std::vector<Triplet> tg, tc, tm, tw;
  for (const Element& e : nl.elements) {
    const Index a = nl.dense_index(e.node_pos);
    const Index b = nl.dense_index(e.node_neg);
    switch (e.kind) {
      case ElementKind::Resistor:
        stamp_pair(tg, a, b, 1.0 / e.value);
        break;
      case ElementKind::Capacitor:
        stamp_pair(tc, a, b, e.value);
        break;
      case ElementKind::Inductor:
      case ElementKind::CurrentSource:
        break;  // handled below / at port assembly
    }
  }
  for (std::size_t k = 0; k < inductors.size(); ++k) {
    const Element& e = *inductors[k];
    tm.emplace_back(Index(k), Index(k), e.value);
    const Index a = nl.dense_index(e.node_pos);
    const Index b = nl.dense_index(e.node_neg);
    if (a >= 0) tw.emplace_back(a, Index(k), 1.0);
    if (b >= 0) tw.emplace_back(b, Index(k), -1.0);
  }

  MnaBlocks blk;
  blk.G = sparse_from_triplets(n, n, std::move(tg));
  blk.C = sparse_from_triplets(n, n, std::move(tc));
  blk.M = sparse_from_triplets(m, m, std::move(tm));
  blk.W = sparse_from_triplets(n, m, std::move(tw));

  DescriptorSystem sys;
  sys.warnings = nl.warnings;

  // Terminals: explicit .port directives when present, else the current
  // sources with their values as injection weights.
  std::vector<Triplet> tb, tl;
  if (!nl.ports.empty()) {
    const Index p = Index(nl.ports.size());
    for (Index j = 0; j < p; ++j) {
      const Port& port = nl.ports[j];
      tb.emplace_back(nl.dense_index(port.input_node), j, 1.0);
      tl.emplace_back(j, nl.dense_index(port.output_node), 1.0);
      sys.port_names.push_back(port.name);
    }
    sys.num_inputs = sys.num_outputs = p;
  } else {
    Index j = 0;
    for (const Element& e : nl.elements) {
      if (e.kind != ElementKind::CurrentSource) continue;
      // Positive source current flows node+ -> node-, i.e. it is drawn from
      // node+ and injected into node-.
      const Index a = nl.dense_index(e.node_pos);
      const Index b = nl.dense_index(e.node_neg);
      if (a >= 0) tb.emplace_back(a, j, -e.value);
      if (b >= 0) tb.emplace_back(b, j, e.value);
      tl.emplace_back(j, b >= 0 ? b : a, 1.0);
      sys.port_names.push_back(e.name);
      ++j;
    }
    sys.num_inputs = sys.num_outputs = j;
  }
  blk.B1 = sparse_from_triplets(n, sys.num_inputs, std::move(tb));
  blk.L1 = sparse_from_triplets(sys.num_outputs, n, std::move(tl));

  DescriptorSystem out = assemble_descriptor(std::move(blk), std::move(sys.port_names));
  out.warnings = std::move(sys.warnings);
  return out;
}

DescriptorSystem assemble_descriptor(MnaBlocks blk, std::vector<std::string> port_names) {
  const Index n = blk.G.rows();
  const Index m = blk.W.cols();
  if (blk.G.cols() != n || blk.C.rows() != n || blk.C.cols() != n)
    throw DimensionMismatch("G and C must be square with equal size");
  if (blk.M.rows() != m || blk.M.cols() != m || blk.W.rows() != n)
    throw DimensionMismatch("W and M have inconsistent branch dimensions");
  if (blk.B1.rows() != n) throw DimensionMismatch("B has wrong row count");
  if (blk.L1.cols() != n) throw DimensionMismatch("L has wrong column count");

  DescriptorSystem sys;
  sys.num_inputs = blk.B1.cols();
  sys.num_outputs = blk.L1.rows();
  sys.order = n + m;
  sys.node_count = n;
  if (port_names.empty()) {
    for (Index j = 0; j < sys.num_inputs; ++j) port_names.push_back("p" + std::to_string(j + 1));
  }
  if (Index(port_names.size()) != sys.num_inputs)
    throw DimensionMismatch("port name count does not match input count");
  sys.port_names = std::move(port_names);

  std::vector<Triplet> te, ta, tbb, tll;
  append_block(te, blk.C, 0, 0);
  append_block(te, blk.M, n, n);
  append_block(ta, blk.G, 0, 0, -1.0);
  append_block(ta, blk.W, 0, n, -1.0);
  append_block(ta, blk.W, n, 0, 1.0, /*transposed=*/true);
  append_block(tbb, blk.B1, 0, 0);
  append_block(tll, blk.L1, 0, 0);
  sys.E = sparse_from_triplets(sys.order, sys.order, std::move(te));
  sys.A = sparse_from_triplets(sys.order, sys.order, std::move(ta));
  sys.B = sparse_from_triplets(sys.order, sys.num_inputs, std::move(tbb));
  sys.L = sparse_from_triplets(sys.num_outputs, sys.order, std::move(tll));
  sys.D = DenseBlock::Zero(sys.num_outputs, sys.num_inputs);

  std::vector<bool> has_cap(n, false);
  for (Index i = 0; i < blk.C.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(blk.C, i); it; ++it) {
      has_cap[it.row()] = true;
      has_cap[it.col()] = true;
    }
  }
  sys.singular_e = std::find(has_cap.begin(), has_cap.end(), false) != has_cap.end();
  sys.mna = std::move(blk);
  return sys;
}

SingularSplit detect_singularity(const DescriptorSystem& sys) {
  const Index n = sys.node_count;
  std::vector<bool> nonzero(n, false);
  // Scan the capacitance block when available, else the node rows/columns of
  // E.  Stored entries are nonzero by construction, so presence == nonzero.
  const SparseMatrix& src = sys.mna ? sys.mna->C : sys.E;
  for (Index i = 0; i < src.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(src, i); it; ++it) {
      if (it.row() < n) nonzero[it.row()] = true;
      if (it.col() < n) nonzero[it.col()] = true;
    }
  }
  SingularSplit split;
  for (Index i = 0; i < n; ++i) {
    (nonzero[i] ? split.capacitive : split.noncapacitive).push_back(i);
  }
  return split;
}

}  // namespace morkit
