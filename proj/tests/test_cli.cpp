#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

// Drives the installed binary end to end: the path arrives in the TCS_CLI
// environment variable set by the test harness.

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string scratch_path(const std::string& stem) {
  static const std::string dir = [] {
    std::string tmpl = "/tmp/tcs_cli_XXXXXX";
    char* got = mkdtemp(tmpl.data());
    REQUIRE(got != nullptr);
    return std::string(got);
  }();
  static int counter = 0;
  return dir + "/" + std::to_string(counter++) + "_" + stem;
}

CmdResult run_cli(const std::string& args, const std::string& env = "") {
  const char* bin = std::getenv("TCS_CLI");
  REQUIRE(bin != nullptr);
  const std::string ob = scratch_path("stdout"), eb = scratch_path("stderr");
  const std::string cmd =
      env + (env.empty() ? "" : " ") + "\"" + bin + "\" " + args + " > " + ob +
      " 2> " + eb;
  const int raw = std::system(cmd.c_str());
  CmdResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(ob);
  r.err = slurp(eb);
  return r;
}

// Data lines of a CSV payload: neither '#' metadata nor the header.
std::vector<std::string> csv_rows(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream is(text);
  std::string line;
  bool seen_header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      seen_header = true;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

std::vector<std::string> fields(const std::string& row) {
  std::vector<std::string> f;
  std::string cur;
  for (char c : row) {
    if (c == ',') {
      f.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  f.push_back(cur);
  return f;
}

std::string write_file(const std::string& stem, const std::string& content) {
  const std::string path = scratch_path(stem);
  std::ofstream f(path, std::ios::binary);
  f << content;
  return path;
}

}  // namespace

TEST_CASE("malformed invocations exit with the usage code", "[cli]") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("simulate --blocks 5").exit_code == 2);         // missing --d
  CHECK(run_cli("simulate --d 4 --blocks 5").exit_code == 2);   // even d
  CHECK(run_cli("simulate --d 3").exit_code == 2);              // no stop rule
  CHECK(run_cli("simulate --d 3 --blocks 5 --t-check nope").exit_code == 2);
  CHECK(run_cli("simulate --d 3 --blocks 5 --t-check 99999").exit_code == 2);
  CHECK(run_cli("simulate --d 3 --blocks 5 --no-such-flag 1").exit_code == 2);
  CHECK(run_cli("simulate --d 3 --blocks 5 --p-comp 1.5").exit_code == 2);
  CHECK(run_cli("weights dump --d 3 --type sideways").exit_code == 2);
  CHECK(run_cli("extrapolate --a 1e-4 --b 1e-5 --db 7").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("--version").exit_code == 0);
}

TEST_CASE("cell derivation output carries the stabilizer tables", "[cli]") {
  CmdResult text = run_cli("derive-cell");
  REQUIRE(text.exit_code == 0);
  CHECK(text.out.find("A_1: X I Z I I I I I I I I I I I I I Z I\n") !=
        std::string::npos);
  CHECK(text.out.find("A_3: Z Z X Z Z I I I I I I I I I I I I I\n") !=
        std::string::npos);
  CHECK(text.out.find("A_18: I I I I I I I I I I I I I X I I Z X") ==
        std::string::npos);  // no stray row
  CHECK(text.out.find("A: I I X I I I X I I X I X I X I I X I\n") !=
        std::string::npos);
  CHECK(text.out.find("K_3: I I X I I -> Z Z X Z Z\n") != std::string::npos);
  // 18 generator rows exactly
  int rows = 0;
  std::istringstream is(text.out);
  std::string line;
  while (std::getline(is, line))
    if (line.rfind("A_", 0) == 0) ++rows;
  CHECK(rows == 18);

  CmdResult js = run_cli("derive-cell --format json");
  REQUIRE(js.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(js.out);
  REQUIRE(j["generators"].size() == 18);
  CHECK(j["generators"][2] == "ZZXZZIIIIIIIIIIIII");
  CHECK(j["face_product"] == "IIXIIIXIIXIXIXIIXI");
  CHECK(j["face_qubits"] == nlohmann::json({3, 7, 10, 12, 14, 17}));
  CHECK(j["star"]["cluster"][2] == "ZZXZZ");
}

TEST_CASE("zero error rates produce a clean zero-rate row", "[cli]") {
  CmdResult r = run_cli("simulate --d 3 --blocks 20 --t-check 4");
  REQUIRE(r.exit_code == 0);
  auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 1);
  auto f = fields(rows[0]);
  REQUIRE(f.size() == 10);
  CHECK(f[0] == "3");
  CHECK(f[5] == "0");  // failures
  CHECK(f[6] == "0");  // P_L
  CHECK(r.out.find("# {") == 0);
  CHECK(r.out.find("\"version\"") != std::string::npos);
  CHECK(r.out.find("\"seed\"") != std::string::npos);
}

TEST_CASE("one worker and one seed rewrite files byte-identically", "[cli]") {
  const std::string base =
      "simulate --d 3 --p-comp 0.01 --p-loss 0.02 --p-lint 0.2 --blocks 120 "
      "--t-check 8 --workers 1";
  const std::string f1 = scratch_path("rep1.csv"), f2 = scratch_path("rep2.csv"),
                    f3 = scratch_path("rep3.csv");
  REQUIRE(run_cli(base + " --seed 7 --out " + f1).exit_code == 0);
  REQUIRE(run_cli(base + " --seed 7 --out " + f2).exit_code == 0);
  REQUIRE(run_cli(base + " --seed 8 --out " + f3).exit_code == 0);
  const std::string a = slurp(f1), b = slurp(f2), c = slurp(f3);
  REQUIRE(!a.empty());
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("unreachable failure targets exit with the infeasible code",
          "[cli]") {
  // Statically impossible: nothing ever fails and nothing else stops the run.
  CHECK(run_cli("simulate --d 3 --failures 5").exit_code == 3);
  // Budget exhausted below the target.
  CHECK(run_cli("simulate --d 3 --failures 5 --blocks 10").exit_code == 3);
  // Projection with no decay between distances.
  CHECK(run_cli("extrapolate --a 1e-5 --b 2e-5 --db 7 --d 33").exit_code == 3);
}

TEST_CASE("config files supply defaults and reject unknown keys", "[cli]") {
  const std::string good = write_file(
      "good.cfg",
      "simulate.d=3\nsimulate.p-comp=0.004\nsimulate.blocks=40\n"
      "simulate.t-check=4\nsimulate.seed=9\n");
  CmdResult ok = run_cli("--config " + good + " simulate");
  REQUIRE(ok.exit_code == 0);
  auto rows = csv_rows(ok.out);
  REQUIRE(rows.size() == 1);
  CHECK(fields(rows[0])[0] == "3");
  CHECK(fields(rows[0])[1] == "0.004");
  CHECK(fields(rows[0])[9] == "9");

  const std::string bad =
      write_file("bad.cfg", "simulate.d=3\nsimulate.warp-factor=9\n");
  CHECK(run_cli("--config " + bad + " simulate --blocks 5").exit_code == 2);
}

TEST_CASE("sweeps cover the whole grid in declared order", "[cli]") {
  CmdResult r = run_cli(
      "sweep --d 3,5 --p-loss 0.004,0.008 --p-comp 0.002 --p-lint 1 "
      "--failures 4 --blocks 300 --t-check 8 --seed 5");
  REQUIRE(r.exit_code == 0);
  auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 4);
  // d outer loop as given, p_loss inner, seeds increment per row.
  CHECK(fields(rows[0])[0] == "3");
  CHECK(fields(rows[1])[0] == "3");
  CHECK(fields(rows[2])[0] == "5");
  CHECK(fields(rows[3])[0] == "5");
  CHECK(fields(rows[0])[2] == "0.004");
  CHECK(fields(rows[1])[2] == "0.008");
  for (int i = 0; i < 4; ++i)
    CHECK(fields(rows[i])[9] == std::to_string(5 + i));

  CmdResult empty = run_cli("sweep --d 3 --p-comp 0.002 --blocks 10");
  REQUIRE(empty.exit_code == 0);
  CHECK(csv_rows(empty.out).empty());
  CHECK(empty.out.find("d,p_comp,p_loss") != std::string::npos);
}

TEST_CASE("lattice dump is machine-readable geometry", "[cli]") {
  CmdResult r = run_cli("lattice dump --d 3");
  REQUIRE(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["d"] == 3);
  CHECK(j["boundary_rows"] == 2);
  CHECK(j["site_classes"].size() == 6);
  CHECK(j["sites"].size() == 38);
  CHECK(j["num_sites"] == 38);
  CHECK(j["cell_layers"]["primal"]["per_layer"] == 6);
  CHECK(j["cell_layers"]["dual"]["per_layer"] == 6);
  // every site names its own faces and neighbouring cells
  for (const auto& s : j["sites"]) {
    CHECK(s["face_of_cells"].size() == 2);
    CHECK(s["edge_of_cells"].size() == 4);
  }
  // schedule arrives as six slots per class
  for (const auto& c : j["site_classes"]) CHECK(c["slots"].size() == 4);
}

TEST_CASE("weights dump lists every matching-graph edge", "[cli]") {
  CmdResult r = run_cli(
      "weights dump --d 3 --p-comp 1e-3 --p-loss 5e-3 --p-lint 0.1");
  REQUIRE(r.exit_code == 0);
  auto rows = csv_rows(r.out);
  REQUIRE(rows.size() > 20);
  bool saw_primal = false, saw_dual = false, saw_boundary = false;
  for (const auto& row : rows) {
    auto f = fields(row);
    REQUIRE(f.size() == 7);
    if (f[0] == "primal") saw_primal = true;
    if (f[0] == "dual") saw_dual = true;
    if (f[1].empty()) FAIL("edge without a source node");
    if (f[2].empty()) {
      saw_boundary = true;
      CHECK((f[4] == "low" || f[4] == "high"));
    }
    CHECK(std::stod(f[5]) > 0.0);
    CHECK(std::stoll(f[6]) > 0);
  }
  CHECK(saw_primal);
  CHECK(saw_dual);
  CHECK(saw_boundary);

  CmdResult only = run_cli("weights dump --d 3 --p-comp 1e-3 --type dual");
  for (const auto& row : csv_rows(only.out)) CHECK(fields(row)[0] == "dual");
}

TEST_CASE("overhead projects required distances from curve files", "[cli]") {
  const std::string curves = write_file("curves.csv",
                                        "d,p_loss,P_L\n"
                                        "7,0.002,5e-4\n"
                                        "9,0.002,5e-5\n"
                                        "7,0.01,2.1e-3\n"
                                        "9,0.01,3e-4\n"
                                        "7,0.05,0.2\n"
                                        "9,0.05,0.25\n");
  CmdResult r = run_cli("overhead --curves " + curves +
                        " --target 1e-15 --baseline-d 31");
  REQUIRE(r.exit_code == 0);
  auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 4);  // baseline + three loss rates
  auto f0 = fields(rows[0]);
  CHECK(f0[1].empty());
  CHECK(f0[2] == "31");
  CHECK(std::stod(f0[0]) == 1.0);
  auto f1 = fields(rows[1]);
  CHECK(f1[1] == "0.002");
  CHECK(f1[2] == "31");
  auto f2 = fields(rows[2]);
  CHECK(f2[1] == "0.01");
  CHECK(f2[2] == "37");
  CHECK_THAT(std::stod(f2[0]), Catch::Matchers::WithinRel(1.774, 0.01));
  auto f3 = fields(rows[3]);
  CHECK(f3[5] == "false");
  CHECK(f3[2].empty());

  CHECK(run_cli("overhead --curves " + curves +
                " --target 1e-15 --convention ceiling")
            .exit_code == 2);
  CHECK(run_cli("overhead --curves /no/such/file.csv --target 1e-15")
            .exit_code == 2);
}

TEST_CASE("extrapolate prints the projected logical rate", "[cli]") {
  CmdResult r = run_cli("extrapolate --a 4.1e-4 --b 6.3e-5 --db 7 --d 33");
  REQUIRE(r.exit_code == 0);
  const double v = std::stod(r.out);
  CHECK(v > 1.6e-15);
  CHECK(v < 1.8e-15);
}

TEST_CASE("cluster dumps emit one JSON line per check and type", "[cli]") {
  const std::string dump = scratch_path("clusters.jsonl");
  CmdResult r = run_cli(
      "simulate --d 3 --p-loss 0.03 --p-comp 2e-3 --blocks 6 --t-check 2 "
      "--monitor both --seed 3 --dump-clusters " +
      dump);
  REQUIRE(r.exit_code == 0);
  std::ifstream f(dump);
  std::string line;
  int lines = 0, with_members = 0;
  while (std::getline(f, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK((j["type"] == "primal" || j["type"] == "dual"));
    CHECK(j["round_hi"].get<std::int64_t>() >=
          j["round_lo"].get<std::int64_t>());
    if (j.contains("superstabilizers")) {
      for (const auto& c : j["superstabilizers"]) {
        CHECK(!c["cells"].empty());
        with_members++;
      }
    }
    ++lines;
  }
  CHECK(lines == 12);  // 6 blocks x 2 monitored types
  CHECK(with_members > 0);

  // The dump needs a block budget to terminate.
  CHECK(run_cli("simulate --d 3 --p-loss 0.03 --failures 2 --dump-clusters " +
                dump)
            .exit_code == 2);
}

TEST_CASE("worker count env var sets the default", "[cli]") {
  CmdResult r = run_cli(
      "simulate --d 3 --p-comp 0.004 --blocks 40 --t-check 4 --format json",
      "TCS_WORKERS=2");
  REQUIRE(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["config"]["workers"] == 2);
  // explicit flag still wins
  CmdResult r1 = run_cli(
      "simulate --d 3 --p-comp 0.004 --blocks 40 --t-check 4 --workers 1 "
      "--format json",
      "TCS_WORKERS=2");
  nlohmann::json j1 = nlohmann::json::parse(r1.out);
  CHECK(j1["config"]["workers"] == 1);
}
