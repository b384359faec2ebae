// SPDX-License-Identifier: Apache-2.0
#include "morkit/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

namespace morkit {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_double(const std::string& tok, int line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || tok.empty())
    throw ParseError(line, "expected a number, got '" + tok + "'");
  return v;
}

long parse_long(const std::string& tok, int line) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size() || tok.empty())
    throw ParseError(line, "expected an integer, got '" + tok + "'");
  return v;
}

// Splits a CSV line; fields themselves never contain commas.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Index require_index(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ManifestError("bundle.json: missing key '" + key + "'");
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ManifestError("bundle.json: key '" + key + "' must be a non-negative integer");
  return static_cast<Index>(v.get<long long>());
}

SparseMatrix load_role(const BundleManifest& m, const std::filesystem::path& dir,
                       const std::string& role) {
  const auto it = m.matrices.find(role);
  const std::filesystem::path p = dir / it->second;
  if (!std::filesystem::exists(p))
    throw ManifestError("bundle references missing file '" + it->second + "' for " + role);
  return read_matrix_market(p);
}

// Accepts a connectivity matrix stored either at node size or padded to full
// descriptor size with structurally zero branch entries.
SparseMatrix strip_branch_rows(const SparseMatrix& b, Index n, Index order) {
  if (b.rows() == n) return b;
  if (b.rows() != order) throw DimensionMismatch("B row count matches neither n nor n + m");
  std::vector<Triplet> ts;
  for (Index i = 0; i < b.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(b, i); it; ++it) {
      if (it.row() >= n) throw DimensionMismatch("B has entries in inductor branch rows");
      ts.emplace_back(it.row(), it.col(), it.value());
    }
  }
  return sparse_from_triplets(n, b.cols(), std::move(ts));
}

SparseMatrix strip_branch_cols(const SparseMatrix& l, Index n, Index order) {
  if (l.cols() == n) return l;
  if (l.cols() != order) throw DimensionMismatch("L column count matches neither n nor n + m");
  std::vector<Triplet> ts;
  for (Index i = 0; i < l.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(l, i); it; ++it) {
      if (it.col() >= n) throw DimensionMismatch("L has entries in inductor branch columns");
      ts.emplace_back(it.row(), it.col(), it.value());
    }
  }
  return sparse_from_triplets(l.rows(), n, std::move(ts));
}

void write_manifest(const json& j, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto p = dir / "bundle.json";
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + p.string());
}

json solves_to_json(const SolveCounts& c) {
  return json{{"with_a", c.with_a}, {"with_e", c.with_e}};
}

json schedule_to_json(const std::vector<BlockRecord>& schedule) {
  json arr = json::array();
  for (const BlockRecord& rec : schedule) {
    arr.push_back(json{{"dir", rec.dir == Direction::Forward ? "forward" : "backward"},
                       {"source", rec.source_cols},
                       {"kept", rec.kept_cols},
                       {"start", rec.start}});
  }
  return arr;
}

}  // namespace

SparseMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++lineno;
  const auto banner = split_ws(lower(line));
  if (banner.size() != 5 || banner[0] != "%%matrixmarket" || banner[1] != "matrix")
    throw ParseError(lineno, "not a Matrix Market matrix file");
  if (banner[2] != "coordinate") throw ParseError(lineno, "only coordinate format is supported");
  if (banner[3] != "real") throw ParseError(lineno, "only real-valued matrices are supported");
  bool symmetric = false;
  if (banner[4] == "symmetric") {
    symmetric = true;
  } else if (banner[4] != "general") {
    throw ParseError(lineno, "unsupported symmetry '" + banner[4] + "'");
  }

  auto next_data_line = [&](std::vector<std::string>& toks) {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '%') continue;
      toks = split_ws(line);
      if (!toks.empty()) return true;
    }
    return false;
  };

  std::vector<std::string> toks;
  if (!next_data_line(toks)) throw ParseError(lineno + 1, "missing size line");
  if (toks.size() != 3) throw ParseError(lineno, "size line must hold rows, columns, entries");
  const long rows = parse_long(toks[0], lineno);
  const long cols = parse_long(toks[1], lineno);
  const long nnz = parse_long(toks[2], lineno);
  if (rows < 0 || cols < 0 || nnz < 0) throw ParseError(lineno, "negative size");
  if (symmetric && rows != cols) throw ParseError(lineno, "symmetric matrix must be square");

  std::vector<Triplet> ts;
  ts.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  for (long k = 0; k < nnz; ++k) {
    if (!next_data_line(toks))
      throw ParseError(lineno, "expected " + std::to_string(nnz) + " entries, file ended early");
    if (toks.size() != 3) throw ParseError(lineno, "entry must hold row, column, value");
    const long i = parse_long(toks[0], lineno);
    const long j = parse_long(toks[1], lineno);
    const double v = parse_double(toks[2], lineno);
    if (i < 1 || i > rows || j < 1 || j > cols) throw ParseError(lineno, "entry index out of range");
    ts.emplace_back(Index(i - 1), Index(j - 1), v);
    if (symmetric && i != j) ts.emplace_back(Index(j - 1), Index(i - 1), v);
  }
  if (next_data_line(toks)) throw ParseError(lineno, "unexpected data after declared entries");
  return sparse_from_triplets(Index(rows), Index(cols), std::move(ts));
}

void write_matrix_market(const SparseMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Index i = 0; i < m.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
      out << (it.row() + 1) << ' ' << (it.col() + 1) << ' ' << fmt17(it.value()) << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

BundleManifest read_manifest(const std::filesystem::path& dir) {
  const auto p = dir / "bundle.json";
  std::ifstream in(p);
  if (!in) throw ManifestError("missing bundle.json in " + dir.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ManifestError("bundle.json: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ManifestError("bundle.json: expected an object");

  static const std::set<std::string> allowed = {"format",  "version", "matrices", "order",
                                                "nodes",   "inputs",  "outputs",  "ports"};
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key()))
      throw ManifestError("bundle.json: unknown key '" + item.key() + "'");
  }
  if (!j.contains("format") || j.at("format") != "morkit-bundle")
    throw ManifestError("bundle.json: missing or unrecognized format tag");

  BundleManifest m;
  if (j.contains("version")) {
    if (!j.at("version").is_number_integer())
      throw ManifestError("bundle.json: version must be an integer");
    m.version = j.at("version").get<int>();
  }
  if (m.version != 1) throw ManifestError("bundle.json: unsupported version");

  if (!j.contains("matrices") || !j.at("matrices").is_object())
    throw ManifestError("bundle.json: missing matrices map");
  static const std::set<std::string> roles = {"E", "A", "G", "C", "M", "W", "B", "L", "D"};
  for (const auto& item : j.at("matrices").items()) {
    if (!roles.count(item.key()))
      throw ManifestError("bundle.json: unknown matrix role '" + item.key() + "'");
    if (!item.value().is_string())
      throw ManifestError("bundle.json: filename for '" + item.key() + "' must be a string");
    m.matrices[item.key()] = item.value().get<std::string>();
  }

  m.order = require_index(j, "order");
  m.inputs = require_index(j, "inputs");
  m.outputs = require_index(j, "outputs");
  if (j.contains("nodes")) m.nodes = require_index(j, "nodes");

  if (j.contains("ports")) {
    if (!j.at("ports").is_array()) throw ManifestError("bundle.json: ports must be an array");
    for (const auto& name : j.at("ports")) {
      if (!name.is_string()) throw ManifestError("bundle.json: port names must be strings");
      m.ports.push_back(name.get<std::string>());
    }
    if (Index(m.ports.size()) != m.inputs)
      throw ManifestError("bundle.json: port name count does not match inputs");
  }
  return m;
}

DescriptorSystem read_bundle(const std::filesystem::path& dir) {
  const BundleManifest m = read_manifest(dir);
  const auto have = [&](const char* role) { return m.matrices.count(role) > 0; };

  const bool direct = have("E") || have("A");
  const bool blocks = have("G") || have("C") || have("M") || have("W");
  if (direct && blocks)
    throw ManifestError("bundle mixes descriptor matrices {E, A} with MNA blocks {G, C, M, W}");
  if (direct && !(have("E") && have("A")))
    throw ManifestError("bundle with descriptor matrices needs both E and A");
  if (blocks && !(have("G") && have("C") && have("M") && have("W")))
    throw ManifestError("bundle with MNA blocks needs all of G, C, M, W");
  if (!direct && !blocks)
    throw ManifestError("bundle must provide either {E, A} or {G, C, M, W}");
  if (!have("B")) throw ManifestError("bundle is missing B");
  if (!have("L")) throw ManifestError("bundle is missing L");

  DescriptorSystem sys;
  if (direct) {
    sys.E = load_role(m, dir, "E");
    sys.A = load_role(m, dir, "A");
    if (sys.E.rows() != m.order || sys.E.cols() != m.order)
      throw DimensionMismatch("E does not match the declared order");
    if (sys.A.rows() != m.order || sys.A.cols() != m.order)
      throw DimensionMismatch("A does not match the declared order");
    sys.B = load_role(m, dir, "B");
    if (sys.B.rows() != m.order || sys.B.cols() != m.inputs)
      throw DimensionMismatch("B does not match the declared dimensions");
    sys.L = load_role(m, dir, "L");
    if (sys.L.rows() != m.outputs || sys.L.cols() != m.order)
      throw DimensionMismatch("L does not match the declared dimensions");
    sys.order = m.order;
    sys.node_count = (m.nodes >= 0) ? m.nodes : m.order;
    if (sys.node_count > m.order) throw ManifestError("bundle.json: nodes exceeds order");
    sys.num_inputs = m.inputs;
    sys.num_outputs = m.outputs;
    sys.D = DenseBlock::Zero(m.outputs, m.inputs);
    if (!m.ports.empty()) {
      sys.port_names = m.ports;
    } else {
      for (Index i = 0; i < m.inputs; ++i) sys.port_names.push_back("p" + std::to_string(i + 1));
    }
    sys.singular_e = !detect_singularity(sys).noncapacitive.empty();
  } else {
    MnaBlocks blk;
    blk.G = load_role(m, dir, "G");
    blk.C = load_role(m, dir, "C");
    blk.M = load_role(m, dir, "M");
    blk.W = load_role(m, dir, "W");
    const Index n = blk.G.rows();
    if (n + blk.W.cols() != m.order)
      throw DimensionMismatch("G and W do not match the declared order");
    if (m.nodes >= 0 && m.nodes != n)
      throw DimensionMismatch("G does not match the declared node count");
    blk.B1 = strip_branch_rows(load_role(m, dir, "B"), n, m.order);
    blk.L1 = strip_branch_cols(load_role(m, dir, "L"), n, m.order);
    if (blk.B1.cols() != m.inputs) throw DimensionMismatch("B does not match the declared inputs");
    if (blk.L1.rows() != m.outputs) throw DimensionMismatch("L does not match the declared outputs");
    sys = assemble_descriptor(std::move(blk), m.ports);
  }

  if (have("D")) {
    const SparseMatrix d = load_role(m, dir, "D");
    if (d.rows() != m.outputs || d.cols() != m.inputs)
      throw DimensionMismatch("D does not match the declared dimensions");
    sys.D = to_dense(d);
  }
  return sys;
}

void write_bundle(const DescriptorSystem& sys, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json matrices;
  if (sys.mna) {
    write_matrix_market(sys.mna->G, dir / "g.mtx");
    write_matrix_market(sys.mna->C, dir / "c.mtx");
    write_matrix_market(sys.mna->M, dir / "m.mtx");
    write_matrix_market(sys.mna->W, dir / "w.mtx");
    write_matrix_market(sys.mna->B1, dir / "b.mtx");
    write_matrix_market(sys.mna->L1, dir / "l.mtx");
    matrices = {{"G", "g.mtx"}, {"C", "c.mtx"}, {"M", "m.mtx"},
                {"W", "w.mtx"}, {"B", "b.mtx"}, {"L", "l.mtx"}};
  } else {
    write_matrix_market(sys.E, dir / "e.mtx");
    write_matrix_market(sys.A, dir / "a.mtx");
    write_matrix_market(sys.B, dir / "b.mtx");
    write_matrix_market(sys.L, dir / "l.mtx");
    matrices = {{"E", "e.mtx"}, {"A", "a.mtx"}, {"B", "b.mtx"}, {"L", "l.mtx"}};
  }
  json j{{"format", "morkit-bundle"},
         {"version", 1},
         {"matrices", matrices},
         {"order", sys.order},
         {"nodes", sys.node_count},
         {"inputs", sys.num_inputs},
         {"outputs", sys.num_outputs}};
  if (sys.D.size() > 0 && max_abs(sys.D) > 0.0) {
    write_matrix_market(sys.D.sparseView(), dir / "d.mtx");
    j["matrices"]["D"] = "d.mtx";
  }
  if (!sys.port_names.empty()) j["ports"] = sys.port_names;
  write_manifest(j, dir);
}

void write_bundle(const ReducedModel& rom, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_matrix_market(rom.e.sparseView(), dir / "e.mtx");
  write_matrix_market(rom.a.sparseView(), dir / "a.mtx");
  write_matrix_market(rom.b.sparseView(), dir / "b.mtx");
  write_matrix_market(rom.l.sparseView(), dir / "l.mtx");
  json j{{"format", "morkit-bundle"},
         {"version", 1},
         {"matrices", json{{"E", "e.mtx"}, {"A", "a.mtx"}, {"B", "b.mtx"}, {"L", "l.mtx"}}},
         {"order", rom.order()},
         {"inputs", rom.b.cols()},
         {"outputs", rom.l.rows()}};
  if (rom.d.size() > 0 && max_abs(rom.d) > 0.0) {
    write_matrix_market(rom.d.sparseView(), dir / "d.mtx");
    j["matrices"]["D"] = "d.mtx";
  }
  write_manifest(j, dir);
}

void write_sweep_csv(const FrequencySweep& sweep, const std::filesystem::path& path) {
  if (sweep.values.size() != sweep.points.size())
    throw MismatchedSweep("sweep has not been evaluated");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());

  const Index q = sweep.values.empty() ? 0 : sweep.values.front().rows();
  const Index p = sweep.values.empty() ? 0 : sweep.values.front().cols();
  out << "omega";
  for (Index o = 0; o < q; ++o) {
    for (Index i = 0; i < p; ++i) {
      const std::string tag = "_" + std::to_string(o + 1) + "_" + std::to_string(i + 1);
      out << ",re" << tag << ",im" << tag << ",mag" << tag;
    }
  }
  out << '\n';
  for (std::size_t k = 0; k < sweep.points.size(); ++k) {
    out << fmt17(sweep.points[k].imag());
    const ComplexBlock& v = sweep.values[k];
    for (Index o = 0; o < q; ++o) {
      for (Index i = 0; i < p; ++i) {
        const double re = v(o, i).real();
        const double im = v(o, i).imag();
        out << ',' << fmt17(re) << ',' << fmt17(im) << ',' << fmt17(std::sqrt(re * re + im * im));
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

FrequencySweep read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty sweep file");
  ++lineno;
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "omega") throw ParseError(lineno, "header must start with omega");
  if ((header.size() - 1) % 3 != 0) throw ParseError(lineno, "header needs re/im/mag triples");
  const std::size_t pairs = (header.size() - 1) / 3;
  if (pairs == 0) throw ParseError(lineno, "sweep has no response columns");

  Index q = 0, p = 0;
  for (std::size_t c = 0; c < pairs; ++c) {
    const std::string& tag = header[1 + 3 * c];
    Index o = 0, i = 0;
    if (std::sscanf(tag.c_str(), "re_%td_%td", &o, &i) != 2)
      throw ParseError(lineno, "malformed response column '" + tag + "'");
    q = std::max(q, o);
    p = std::max(p, i);
  }
  if (Index(pairs) != q * p) throw ParseError(lineno, "response columns do not form a full grid");

  FrequencySweep sweep;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) throw ParseError(lineno, "wrong field count");
    sweep.points.emplace_back(0.0, parse_double(fields[0], lineno));
    ComplexBlock v(q, p);
    bool finite = true;
    std::size_t c = 1;
    for (Index o = 0; o < q; ++o) {
      for (Index i = 0; i < p; ++i) {
        const double re = parse_double(fields[c++], lineno);
        const double im = parse_double(fields[c++], lineno);
        parse_double(fields[c++], lineno);  // magnitude column is derived
        v(o, i) = Complex(re, im);
        finite = finite && std::isfinite(re) && std::isfinite(im);
      }
    }
    sweep.values.push_back(std::move(v));
    if (!finite) sweep.skipped.push_back(Index(sweep.points.size()) - 1);
  }
  return sweep;
}

void write_report_json(const RunReport& report, const std::filesystem::path& path) {
  json per_port = json::array();
  const std::size_t ports = std::max({report.per_port_error.size(), report.per_port_solves.size(),
                                      report.schedules.size()});
  for (std::size_t i = 0; i < ports; ++i) {
    json entry{{"port", i + 1}};
    if (i < report.per_port_error.size()) entry["max_error"] = report.per_port_error[i];
    if (i < report.per_port_solves.size()) entry["solves"] = solves_to_json(report.per_port_solves[i]);
    if (i < report.schedules.size()) entry["schedule"] = schedule_to_json(report.schedules[i]);
    per_port.push_back(std::move(entry));
  }
  const json j{{"command", report.command},
               {"input", report.input},
               {"method", report.method},
               {"order", report.order},
               {"modulo", report.modulo},
               {"workers", report.workers},
               {"seed", report.seed},
               {"source_order", report.source_order},
               {"nodes", report.node_count},
               {"inputs", report.inputs},
               {"outputs", report.outputs},
               {"regularized", report.regularized},
               {"eliminated_nodes", report.eliminated_nodes},
               {"sweep", json{{"omega_min", report.sweep_min},
                              {"omega_max", report.sweep_max},
                              {"points", report.sweep_points}}},
               {"max_error", report.max_error},
               {"solve_counts", solves_to_json(report.solves)},
               {"per_port", per_port},
               {"deflated", report.deflated},
               {"warnings", report.warnings}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_timings_json(const std::vector<std::pair<std::string, double>>& seconds,
                        const std::filesystem::path& path) {
  json j;
  for (const auto& [name, value] : seconds) j[name] = value;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace morkit
