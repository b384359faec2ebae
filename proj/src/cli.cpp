// SPDX-License-Identifier: Apache-2.0
#include "morkit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "morkit/generate.hpp"
#include "morkit/io.hpp"
#include "morkit/krylov.hpp"
#include "morkit/mna.hpp"
#include "morkit/netlist.hpp"
#include "morkit/regularize.hpp"
#include "morkit/system_ops.hpp"

namespace morkit {

namespace {

namespace fs = std::filesystem;

// Bad flag combinations and unusable inputs; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

DescriptorSystem load_input(const std::string& path) {
  const fs::path p(path);
  if (!fs::exists(p)) throw IoError("input not found: " + path);
  if (fs::is_directory(p)) return read_bundle(p);
  if (p.filename() == "bundle.json") return read_bundle(p.parent_path());
  return assemble_mna(read_netlist_file(path));
}

// Loaded model plus the operator view the pipeline runs on; the system lives
// on the heap so references held by ops stay valid when this struct moves.
struct LoadedModel {
  std::unique_ptr<DescriptorSystem> sys;
  std::shared_ptr<const RegularizedSystem> reg;
  std::unique_ptr<DescriptorOps> ops;
  Index eliminated = 0;
};

LoadedModel prepare(const std::string& path, std::ostream& out) {
  LoadedModel m;
  m.sys = std::make_unique<DescriptorSystem>(load_input(path));
  if (m.sys->singular_e) {
    if (!m.sys->mna)
      throw UsageError("model is structurally singular but carries no MNA blocks; "
                       "provide a netlist or a {G, C, M, W} bundle");
    const SingularSplit split = detect_singularity(*m.sys);
    m.eliminated = Index(split.noncapacitive.size());
    out << "singular E detected: regularizing, n2 = " << m.eliminated
        << " non-capacitive nodes eliminated\n";
    m.reg = std::make_shared<RegularizedSystem>(partition_mna(*m.sys, split));
    m.ops = std::make_unique<RegularizedOps>(m.reg);
  } else {
    m.ops = std::make_unique<RegularOps>(*m.sys);
  }
  return m;
}

void check_order(const RunConfig& cfg, const DescriptorOps& ops) {
  const Index p = ops.num_inputs();
  const Index min_r = (cfg.method == Method::MM) ? p : 2 * p;
  if (cfg.order < min_r)
    throw UsageError("order " + std::to_string(cfg.order) + " is below the minimum " +
                     std::to_string(min_r) + " for " + method_name(cfg.method) + " with " +
                     std::to_string(p) + " ports");
  if (cfg.order > ops.order())
    throw UsageError("order " + std::to_string(cfg.order) + " exceeds the system order " +
                     std::to_string(ops.order()));
}

fs::path resolve_output_base(const RunConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("MORKIT_OUTPUT_DIR"); env && *env) return env;
  return "runs";
}

fs::path make_run_dir(const RunConfig& cfg, const std::string& command) {
  const fs::path base = resolve_output_base(cfg);
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  fs::path dir = base / (command + "-" + stamp);
  for (int k = 2; fs::exists(dir); ++k)
    dir = base / (command + "-" + stamp + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir;
}

std::vector<double> per_port_errors(const FrequencySweep& ref, const FrequencySweep& rom) {
  std::vector<bool> skip(ref.points.size(), false);
  for (Index k : ref.skipped) skip[std::size_t(k)] = true;
  for (Index k : rom.skipped) skip[std::size_t(k)] = true;
  const Index p = ref.values.empty() ? 0 : ref.values.front().cols();
  std::vector<double> out(std::size_t(p), 0.0);
  for (std::size_t k = 0; k < ref.points.size(); ++k) {
    if (skip[k]) continue;
    for (Index i = 0; i < p; ++i) {
      out[std::size_t(i)] = std::max(
          out[std::size_t(i)], (ref.values[k].col(i) - rom.values[k].col(i)).cwiseAbs().maxCoeff());
    }
  }
  return out;
}

double seconds(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

int cmd_reduce(const RunConfig& cfg, std::ostream& out) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const LoadedModel model = prepare(cfg.input, out);
  check_order(cfg, *model.ops);
  const Index p = model.ops->num_inputs();
  const auto t1 = clock::now();

  const FrequencySweep grid = log_sweep(cfg.sweep.omega_min, cfg.sweep.omega_max, cfg.sweep.points);
  const FrequencySweep original = transfer_function(*model.ops, grid);
  const auto t2 = clock::now();

  const PerPortResult result =
      reduce_per_port(*model.ops, cfg.method, cfg.order, cfg.modulo, grid, cfg.workers);
  const auto t3 = clock::now();

  const fs::path dir = make_run_dir(cfg, "reduce");
  write_sweep_csv(original, dir / "original_sweep.csv");
  write_sweep_csv(result.response, dir / "rom_sweep.csv");
  for (std::size_t i = 0; i < result.models.size(); ++i)
    write_bundle(result.models[i], dir / ("rom_port" + std::to_string(i + 1)));

  RunReport rep;
  rep.command = "reduce";
  rep.input = cfg.input;
  rep.method = method_name(cfg.method);
  rep.order = cfg.order;
  rep.modulo = (cfg.method == Method::AEKS) ? cfg.modulo : 0;
  rep.workers = cfg.workers;
  rep.seed = cfg.seed;
  rep.source_order = model.ops->order();
  rep.node_count = model.sys->node_count;
  rep.inputs = p;
  rep.outputs = model.ops->num_outputs();
  rep.regularized = (model.reg != nullptr);
  rep.eliminated_nodes = model.eliminated;
  rep.sweep_min = cfg.sweep.omega_min;
  rep.sweep_max = cfg.sweep.omega_max;
  rep.sweep_points = cfg.sweep.points;
  rep.max_error = max_error(original, result.response);
  rep.per_port_error = per_port_errors(original, result.response);
  for (const ReducedModel& rom : result.models) {
    rep.per_port_solves.push_back(rom.solves);
    rep.schedules.push_back(rom.schedule);
    rep.solves.with_a += rom.solves.with_a;
    rep.solves.with_e += rom.solves.with_e;
    rep.deflated = rep.deflated || rom.deflated;
  }
  rep.warnings = model.sys->warnings;
  write_report_json(rep, dir / "report.json");
  const auto t4 = clock::now();
  write_timings_json({{"load", seconds(t0, t1)},
                      {"original_sweep", seconds(t1, t2)},
                      {"reduce", seconds(t2, t3)},
                      {"write", seconds(t3, t4)},
                      {"total", seconds(t0, t4)}},
                     dir / "timings.json");

  out << "method " << rep.method << ", order " << rep.order << ", ports " << p << "\n";
  out << "max_error " << fmt("%.6e", rep.max_error) << "\n";
  out << "solves: " << rep.solves.with_a << " with A, " << rep.solves.with_e << " with E\n";
  if (rep.deflated) out << "note: basis deflation occurred; reduced orders may be below the request\n";
  out << "artifacts: " << dir.string() << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const LoadedModel model = prepare(cfg.input, out);
  const FrequencySweep grid = log_sweep(cfg.sweep.omega_min, cfg.sweep.omega_max, cfg.sweep.points);
  const FrequencySweep sweep = transfer_function(*model.ops, grid);
  const auto t1 = clock::now();

  const fs::path dir = make_run_dir(cfg, "sweep");
  write_sweep_csv(sweep, dir / "sweep.csv");

  RunReport rep;
  rep.command = "sweep";
  rep.input = cfg.input;
  rep.method = "none";
  rep.workers = cfg.workers;
  rep.seed = cfg.seed;
  rep.source_order = model.ops->order();
  rep.node_count = model.sys->node_count;
  rep.inputs = model.ops->num_inputs();
  rep.outputs = model.ops->num_outputs();
  rep.regularized = (model.reg != nullptr);
  rep.eliminated_nodes = model.eliminated;
  rep.sweep_min = cfg.sweep.omega_min;
  rep.sweep_max = cfg.sweep.omega_max;
  rep.sweep_points = cfg.sweep.points;
  rep.warnings = model.sys->warnings;
  write_report_json(rep, dir / "report.json");
  const auto t2 = clock::now();
  write_timings_json({{"evaluate", seconds(t0, t1)}, {"write", seconds(t1, t2)},
                      {"total", seconds(t0, t2)}},
                     dir / "timings.json");

  if (!sweep.skipped.empty())
    out << "note: " << sweep.skipped.size() << " points hit a pole and were skipped\n";
  out << "artifacts: " << dir.string() << "\n";
  return 0;
}

int cmd_moments(const RunConfig& cfg, Index count, std::ostream& out) {
  const LoadedModel model = prepare(cfg.input, out);
  const std::vector<DenseBlock> blocks = moments(*model.ops, count);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out << "M" << i << "\n";
    const DenseBlock& b = blocks[i];
    for (Index r = 0; r < b.rows(); ++r) {
      for (Index c = 0; c < b.cols(); ++c) out << (c ? " " : "") << fmt("%.12g", b(r, c));
      out << "\n";
    }
  }
  return 0;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
  const LoadedModel model = prepare(cfg.input, out);
  {
    RunConfig strictest = cfg;
    strictest.method = Method::EKS;  // 2p floor governs the shared order
    check_order(strictest, *model.ops);
  }
  const FrequencySweep grid = log_sweep(cfg.sweep.omega_min, cfg.sweep.omega_max, cfg.sweep.points);
  const FrequencySweep original = transfer_function(*model.ops, grid);

  struct Row {
    std::string name;
    double err = 0.0;
    SolveCounts solves;
  };
  std::vector<Row> rows;
  for (const Method method : {Method::MM, Method::EKS, Method::AEKS}) {
    const PerPortResult result =
        reduce_per_port(*model.ops, method, cfg.order, cfg.modulo, grid, cfg.workers);
    Row row;
    row.name = method_name(method);
    row.err = max_error(original, result.response);
    for (const ReducedModel& rom : result.models) {
      row.solves.with_a += rom.solves.with_a;
      row.solves.with_e += rom.solves.with_e;
    }
    rows.push_back(std::move(row));
  }

  const double mm_err = rows.front().err;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %6s %13s %10s %10s %10s\n", "method", "order",
                "max_error", "err_red_%", "solves_A", "solves_E");
  out << line;
  for (const Row& row : rows) {
    const double red = (mm_err > 0.0) ? (mm_err - row.err) / mm_err * 100.0 : 0.0;
    std::snprintf(line, sizeof line, "%-6s %6lld %13.6e %10.2f %10lld %10lld\n", row.name.c_str(),
                  static_cast<long long>(cfg.order), row.err, red, row.solves.with_a,
                  row.solves.with_e);
    out << line;
  }
  return 0;
}

int cmd_gen(const GridSpec& spec, const std::string& out_path, std::ostream& out) {
  const std::string text = generate_netlist(spec);
  if (out_path.empty() || out_path == "-") {
    out << text;
    return 0;
  }
  std::ofstream f(out_path);
  if (!f) throw IoError("cannot write " + out_path);
  f << text;
  if (!f) throw IoError("failed writing " + out_path);
  out << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Moment-matching model order reduction for RLC descriptor models"};
  app.name("morkit");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string method_str = "eks";
  Index moment_count = 3;
  GridSpec gen_spec;
  std::string gen_out;
  std::string topology_str = "mesh";

  const auto add_common = [&](CLI::App* c) {
    c->add_option("input", cfg.input, "netlist file or bundle directory")->required();
    c->add_option("-o,--output", cfg.output_dir,
                  "base directory for run artifacts (default $MORKIT_OUTPUT_DIR, then ./runs)");
  };
  const auto add_sweep_opts = [&](CLI::App* c) {
    c->add_option("--sweep-min", cfg.sweep.omega_min, "lowest angular frequency")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--sweep-max", cfg.sweep.omega_max, "highest angular frequency")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--sweep-points", cfg.sweep.points, "number of sweep points")
        ->check(CLI::Range(Index(1), Index(100000)))
        ->capture_default_str();
  };
  const auto add_reduction_opts = [&](CLI::App* c) {
    c->add_option("--method", method_str, "reduction method: mm, eks, or aeks")
        ->check(CLI::IsMember({"mm", "eks", "aeks"}))
        ->capture_default_str();
    c->add_option("-r,--order", cfg.order, "reduced order per port")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("-m,--modulo", cfg.modulo, "sparse-direction blocks per dense block (aeks)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("-w,--workers", cfg.workers, "worker threads (0 = auto, capped at ports)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
  };

  auto* c_reduce = app.add_subcommand("reduce", "reduce a model and compare frequency responses");
  add_common(c_reduce);
  add_reduction_opts(c_reduce);
  add_sweep_opts(c_reduce);

  auto* c_sweep = app.add_subcommand("sweep", "evaluate a model's frequency response");
  add_common(c_sweep);
  add_sweep_opts(c_sweep);

  auto* c_moments = app.add_subcommand("moments", "print leading moment blocks at s = 0");
  add_common(c_moments);
  c_moments->add_option("-k,--count", moment_count, "number of moment blocks")
      ->check(CLI::Range(Index(1), Index(64)))
      ->capture_default_str();

  auto* c_compare =
      app.add_subcommand("compare", "run mm, eks, and aeks at one order and tabulate errors");
  add_common(c_compare);
  add_reduction_opts(c_compare);
  add_sweep_opts(c_compare);

  auto* c_gen = app.add_subcommand("gen", "emit a parametric RC/RLC benchmark netlist");
  c_gen->add_option("--nodes", gen_spec.nodes, "node count")
      ->check(CLI::Range(Index(2), Index(2000000)))
      ->capture_default_str();
  c_gen->add_option("--ports", gen_spec.ports, "port count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_gen->add_option("--cap-dropout", gen_spec.cap_dropout, "fraction of node capacitors removed")
      ->check(CLI::Range(0.0, 0.999))
      ->capture_default_str();
  c_gen->add_option("--inductor-fraction", gen_spec.inductor_fraction,
                    "probability an edge is an inductor")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_gen->add_option("--topology", topology_str, "mesh or ladder")
      ->check(CLI::IsMember({"mesh", "ladder"}))
      ->capture_default_str();
  c_gen->add_option("--seed", gen_spec.seed, "generator seed")->capture_default_str();
  c_gen->add_option("-o,--out", gen_out, "output netlist path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  cfg.method = method_from_name(method_str);
  gen_spec.topology = (topology_str == "ladder") ? Topology::Ladder : Topology::Mesh;

  try {
    if (c_reduce->parsed()) return cmd_reduce(cfg, out);
    if (c_sweep->parsed()) return cmd_sweep(cfg, out);
    if (c_moments->parsed()) return cmd_moments(cfg, moment_count, out);
    if (c_compare->parsed()) return cmd_compare(cfg, out);
    if (c_gen->parsed()) return cmd_gen(gen_spec, gen_out, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ManifestError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionMismatch& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const MismatchedSweep& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "error: no subcommand selected\n";
  return 2;
}

}  // namespace morkit
