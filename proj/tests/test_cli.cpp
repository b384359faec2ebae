// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "morkit/cli.hpp"
#include "morkit/io.hpp"
#include "test_util.hpp"

using namespace morkit;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"morkit"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult res;
  res.code = run_cli(int(argv.size()), argv.data(), out, err);
  res.out = out.str();
  res.err = err.str();
  return res;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

// Each run gets its own output base, so the timestamped run directory under
// it is unique and easy to find.
fs::path only_run_dir(const fs::path& base) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(base)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  REQUIRE(dirs.size() == 1);
  return dirs.front();
}

nlohmann::json report_of(const fs::path& base) {
  std::ifstream in(only_run_dir(base) / "report.json");
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

// Reduces the ladder with one method and returns the reported max_error.
double reduce_error(const fs::path& net, const fs::path& base,
                    const std::vector<std::string>& extra) {
  std::vector<std::string> args{"reduce",      net.string(),  "-o",   base.string(),
                                "--sweep-min", "1e-4",        "--sweep-max", "10",
                                "--sweep-points", "80"};
  args.insert(args.end(), extra.begin(), extra.end());
  const CliResult res = run(args);
  REQUIRE(res.code == 0);
  return report_of(base).at("max_error").get<double>();
}

}  // namespace

TEST_CASE("eks beats plain moment matching at equal order") {
  test::TempDir tmp("cli-methods");
  const fs::path net = tmp.path() / "ladder.sp";
  write_text(net, test::rc_ladder_text(60));

  const double mm = reduce_error(net, tmp.path() / "mm", {"--method", "mm", "--order", "8"});
  const double eks = reduce_error(net, tmp.path() / "eks", {"--method", "eks", "--order", "8"});
  CHECK(eks < mm);

  // AEKS with every block in both directions is the same subspace, so the
  // reported error is the same number.
  const double aeks = reduce_error(net, tmp.path() / "aeks",
                                   {"--method", "aeks", "--order", "8", "--modulo", "1"});
  CHECK(std::abs(aeks - eks) <= 1e-8);
}

TEST_CASE("reduce run directory holds the full artifact set") {
  test::TempDir tmp("cli-artifacts");
  const fs::path net = tmp.path() / "ladder.sp";
  write_text(net, test::rc_ladder_text(40));
  const fs::path base = tmp.path() / "out";

  const CliResult res =
      run({"reduce", net.string(), "-o", base.string(), "--method", "eks", "--order", "8"});
  REQUIRE(res.code == 0);
  CHECK(res.out.find("max_error") != std::string::npos);
  CHECK(res.out.find("artifacts: ") != std::string::npos);

  const fs::path dir = only_run_dir(base);
  CHECK(fs::exists(dir / "original_sweep.csv"));
  CHECK(fs::exists(dir / "rom_sweep.csv"));
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "timings.json"));
  REQUIRE(fs::exists(dir / "rom_port1" / "bundle.json"));
  const DescriptorSystem rom = read_bundle(dir / "rom_port1");
  CHECK(rom.order == 8);
  CHECK(rom.num_inputs == 1);

  const nlohmann::json j = report_of(base);
  CHECK(j.at("method") == "eks");
  CHECK(j.at("order") == 8);
  CHECK(j.at("regularized") == false);
  CHECK(j.at("per_port").size() == 1);
}

TEST_CASE("sweep evaluates a model without reducing it") {
  test::TempDir tmp("cli-sweep");
  const fs::path net = tmp.path() / "rc.sp";
  write_text(net, "r1 1 0 1\nc1 1 0 1\n.port in 1\n");
  const fs::path base = tmp.path() / "out";

  const CliResult res = run({"sweep", net.string(), "-o", base.string(), "--sweep-points", "16"});
  REQUIRE(res.code == 0);
  const fs::path csv = only_run_dir(base) / "sweep.csv";
  REQUIRE(fs::exists(csv));
  CHECK(lines_of(read_text(csv)).size() == 17);  // header + 16 points
  CHECK(report_of(base).at("command") == "sweep");
}

TEST_CASE("bundle directories are accepted as input") {
  test::TempDir tmp("cli-bundle");
  const fs::path dir = tmp.path() / "model";
  write_bundle(test::scalar_rc(), dir);

  SUBCASE("by directory") {
    const CliResult res = run({"moments", dir.string(), "-k", "1"});
    CHECK(res.code == 0);
    CHECK(res.out.find("M0") != std::string::npos);
  }
  SUBCASE("by manifest path") {
    const CliResult res = run({"moments", (dir / "bundle.json").string(), "-k", "1"});
    CHECK(res.code == 0);
  }
}

TEST_CASE("moments on the scalar rc model prints the golden sequence") {
  test::TempDir tmp("cli-moments");
  const fs::path net = tmp.path() / "rc.sp";
  write_text(net, "r1 1 0 1\nc1 1 0 1\n.port in 1\n");

  const CliResult res = run({"moments", net.string(), "--count", "3"});
  REQUIRE(res.code == 0);
  const auto lines = lines_of(res.out);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "M0");
  CHECK(lines[1] == "1");
  CHECK(lines[2] == "M1");
  CHECK(lines[3] == "-1");
  CHECK(lines[4] == "M2");
  CHECK(lines[5] == "1");
}

TEST_CASE("compare table carries the error-reduction arithmetic") {
  test::TempDir tmp("cli-compare");
  const fs::path net = tmp.path() / "ladder.sp";
  write_text(net, test::rc_ladder_text(50));

  const CliResult res = run({"compare", net.string(), "-o", tmp.path().string(), "--order", "8",
                             "--sweep-min", "1e-4", "--sweep-max", "10", "--sweep-points", "60"});
  REQUIRE(res.code == 0);
  const auto lines = lines_of(res.out);
  REQUIRE(lines.size() == 4);  // header + mm + eks + aeks

  struct Row {
    std::string name;
    long long order;
    double err, red;
    long long sa, se;
  };
  auto parse_row = [](const std::string& line) {
    Row r;
    std::istringstream ss(line);
    ss >> r.name >> r.order >> r.err >> r.red >> r.sa >> r.se;
    REQUIRE(ss);
    return r;
  };
  const Row mm = parse_row(lines[1]);
  const Row eks = parse_row(lines[2]);
  const Row aeks = parse_row(lines[3]);
  CHECK(mm.name == "mm");
  CHECK(eks.name == "eks");
  CHECK(aeks.name == "aeks");
  CHECK(mm.order == 8);
  CHECK(eks.order == 8);

  // The reduction column is (mm - x) / mm * 100 of the printed errors.
  CHECK(mm.red == 0.0);
  CHECK(std::abs(eks.red - (mm.err - eks.err) / mm.err * 100.0) <= 0.006);
  CHECK(std::abs(aeks.red - (mm.err - aeks.err) / mm.err * 100.0) <= 0.006);
}

TEST_CASE("generated netlists are byte-identical for identical seeds") {
  const std::vector<std::string> spec{"gen",       "--nodes", "100", "--ports", "4",
                                      "--cap-dropout", "0.1", "--seed", "7"};
  const CliResult a = run(spec);
  const CliResult b = run(spec);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find(".port") != std::string::npos);

  std::vector<std::string> other = spec;
  other.back() = "8";
  CHECK(run(other).out != a.out);

  // Writing to a file produces the same bytes as stdout.
  test::TempDir tmp("cli-gen");
  const fs::path net = tmp.path() / "mesh.sp";
  std::vector<std::string> to_file = spec;
  to_file.insert(to_file.end(), {"-o", net.string()});
  REQUIRE(run(to_file).code == 0);
  CHECK(read_text(net) == a.out);
}

TEST_CASE("generated ladders parse back to the requested size") {
  const CliResult res = run({"gen", "--topology", "ladder", "--nodes", "12", "--seed", "1"});
  REQUIRE(res.code == 0);
  const DescriptorSystem sys = test::sys_from_netlist(res.out);
  CHECK(sys.node_count == 12);
  CHECK(sys.num_inputs == 1);
}

TEST_CASE("singular inputs are regularized with a log line") {
  test::TempDir tmp("cli-singular");
  const fs::path net = tmp.path() / "mesh.sp";
  const CliResult gen = run({"gen", "--nodes", "40", "--ports", "2", "--cap-dropout", "0.3",
                             "--seed", "3", "-o", net.string()});
  REQUIRE(gen.code == 0);

  const fs::path base = tmp.path() / "out";
  const CliResult res =
      run({"reduce", net.string(), "-o", base.string(), "--method", "eks", "--order", "8"});
  REQUIRE(res.code == 0);
  CHECK(res.out.find("singular E detected: regularizing, n2 = ") != std::string::npos);

  const nlohmann::json j = report_of(base);
  CHECK(j.at("regularized") == true);
  CHECK(j.at("eliminated_nodes").get<long long>() >= 1);
}

TEST_CASE("per-port sweep artifacts do not depend on the worker count") {
  test::TempDir tmp("cli-workers");
  const fs::path net = tmp.path() / "mesh.sp";
  REQUIRE(run({"gen", "--nodes", "30", "--ports", "4", "--seed", "11", "-o", net.string()}).code == 0);

  auto rom_sweep = [&](const char* workers, const fs::path& base) {
    const CliResult res = run({"reduce", net.string(), "-o", base.string(), "--method", "eks",
                               "--order", "8", "-w", workers, "--sweep-points", "40"});
    REQUIRE(res.code == 0);
    return read_text(only_run_dir(base) / "rom_sweep.csv");
  };
  const std::string serial = rom_sweep("1", tmp.path() / "w1");
  const std::string parallel = rom_sweep("4", tmp.path() / "w4");
  CHECK(serial == parallel);
}

TEST_CASE("environment variable supplies the default output base") {
  test::TempDir tmp("cli-env");
  const fs::path net = tmp.path() / "rc.sp";
  write_text(net, "r1 1 0 1\nc1 1 0 1\n.port in 1\n");
  const fs::path base = tmp.path() / "envout";

  const char* old = std::getenv("MORKIT_OUTPUT_DIR");
  const std::string saved = old ? old : "";
  ::setenv("MORKIT_OUTPUT_DIR", base.string().c_str(), 1);
  const CliResult res = run({"sweep", net.string(), "--sweep-points", "4"});
  if (old) {
    ::setenv("MORKIT_OUTPUT_DIR", saved.c_str(), 1);
  } else {
    ::unsetenv("MORKIT_OUTPUT_DIR");
  }

  REQUIRE(res.code == 0);
  CHECK(fs::exists(only_run_dir(base) / "sweep.csv"));
}

TEST_CASE("usage problems exit with code 2") {
  test::TempDir tmp("cli-usage");
  const fs::path net = tmp.path() / "rc.sp";
  write_text(net, "r1 1 0 1\nc1 1 0 1\n.port in 1\n");

  SUBCASE("missing input file") {
    const CliResult res = run({"reduce", (tmp.path() / "ghost.sp").string()});
    CHECK(res.code == 2);
    CHECK(res.err.find("input not found") != std::string::npos);
  }
  SUBCASE("no subcommand") {
    CHECK(run({}).code == 2);
  }
  SUBCASE("unknown subcommand") {
    CHECK(run({"bogus"}).code == 2);
  }
  SUBCASE("unknown flag") {
    CHECK(run({"reduce", net.string(), "--frobnicate"}).code == 2);
  }
  SUBCASE("order below the method floor") {
    test::TempDir out("cli-usage-floor");
    const fs::path mesh = tmp.path() / "mesh.sp";
    REQUIRE(run({"gen", "--nodes", "20", "--ports", "2", "--seed", "5", "-o", mesh.string()})
                .code == 0);
    const CliResult res = run({"reduce", mesh.string(), "-o", out.path().string(), "--method",
                               "eks", "--order", "3"});
    CHECK(res.code == 2);
    CHECK(res.err.find("below the minimum") != std::string::npos);
  }
  SUBCASE("order above the model order") {
    test::TempDir out("cli-usage-cap");
    const CliResult res = run({"reduce", net.string(), "-o", out.path().string(), "--method",
                               "mm", "--order", "5"});
    CHECK(res.code == 2);
    CHECK(res.err.find("exceeds the system order") != std::string::npos);
  }
  SUBCASE("modulo must be positive") {
    CHECK(run({"reduce", net.string(), "--method", "aeks", "--modulo", "0"}).code == 2);
  }
  SUBCASE("netlist that does not parse") {
    const fs::path bad = tmp.path() / "bad.sp";
    write_text(bad, "hello world 1 2\n");
    const CliResult res = run({"sweep", bad.string()});
    CHECK(res.code == 2);
    CHECK(res.err.find("line 1") != std::string::npos);
  }
  SUBCASE("help exits cleanly") {
    const CliResult res = run({"--help"});
    CHECK(res.code == 0);
    CHECK(res.out.find("Usage") != std::string::npos);
  }
}

TEST_CASE("numerical failures exit with code 1") {
  test::TempDir tmp("cli-numfail");
  const fs::path net = tmp.path() / "island.sp";
  // Nodes 2 and 3 form a resistive island with no capacitor and no path to
  // ground, so the eliminated block is singular.
  write_text(net, "r1 1 0 1\nc1 1 0 1\nr2 2 3 1\n.port p1 1\n");

  const CliResult res = run({"sweep", net.string(), "-o", tmp.path().string()});
  CHECK(res.code == 1);
  CHECK(res.err.find("numerical failure") != std::string::npos);
}
