// tcs: command-line front end for the cluster-state loss simulator.
//
// Subcommands: simulate, sweep, weights dump, lattice dump, derive-cell,
// overhead, extrapolate. Every output file embeds the full effective
// configuration, the seed, and the tool version on '#'-prefixed JSON
// metadata lines, so a result can always be traced back to the run that
// produced it. With --workers 1 the same invocation rewrites files
// byte-identically; wall-clock figures go to stderr only.
//
// Exit codes: 0 success, 2 usage error, 3 infeasible run (a requested
// failure target that was not reached).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tcsim/io.hpp"

namespace {

using namespace tcsim;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int default_workers() {
  if (const char* v = std::getenv("TCS_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end && *end == '\0' && n >= 1 && n <= 4096) return static_cast<int>(n);
  }
  return 1;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << content;
}

void require_distance(int d) {
  if (d < 3 || d % 2 == 0)
    throw CLI::ValidationError("--d", "distance must be odd and >= 3");
}

// Options shared by simulate and sweep.
struct SimOpts {
  double p_comp = 0, p_loss = 0, p_lint = 0;
  std::uint64_t seed = 0;
  std::int64_t blocks = 0;    // 0: no block budget
  std::int64_t failures = 0;  // 0: no failure target
  double max_seconds = 0;     // 0: no deadline
  std::string t_check = "auto";
  std::int64_t t_delete = 0;  // 0: retention defaults to 5d
  std::string monitor = "primal";
  int workers = default_workers();
  std::string out;
  std::string format = "csv";
};

void add_noise_options(CLI::App* cmd, SimOpts& o) {
  cmd->add_option("--p-comp", o.p_comp,
                  "Computational error probability per qubit per round")
      ->capture_default_str();
  cmd->add_option("--p-lint", o.p_lint,
                  "Pauli-kick probability per entangling step skipped by a "
                  "lost partner")
      ->capture_default_str();
}

void add_run_options(CLI::App* cmd, SimOpts& o) {
  cmd->add_option("--seed", o.seed, "Base seed for the deterministic RNG")
      ->capture_default_str();
  cmd->add_option("--blocks", o.blocks, "Stop after this many blocks (0: off)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--failures", o.failures,
                  "Stop after this many failed blocks (0: off)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--max-seconds", o.max_seconds,
                  "Stop after this much wall time (0: off)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--t-check", o.t_check,
                  "Rounds per logical check: 'auto' (adaptive) or a fixed "
                  "count 1..10000")
      ->capture_default_str();
  cmd->add_option("--t-delete", o.t_delete,
                  "Detection-history retention in rounds (0: 5*d)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--monitor", o.monitor,
                  "Lattice types checked for logical failure")
      ->check(CLI::IsMember({"primal", "both"}))
      ->capture_default_str();
  cmd->add_option("--workers", o.workers,
                  "Worker threads (default: TCS_WORKERS or 1)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Output file (default: stdout)");
  cmd->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

// Resolves --t-check / --t-delete / --monitor into a RunConfig.
RunConfig make_run_config(const SimOpts& o) {
  RunConfig run;
  if (o.t_check == "auto") {
    run.t_check = 16;
    run.adapt_t_check = true;
  } else {
    try {
      std::size_t pos = 0;
      const long v = std::stol(o.t_check, &pos);
      if (pos != o.t_check.size() || v < 1 || v > 10000)
        throw std::invalid_argument("range");
      run.t_check = v;
    } catch (const std::exception&) {
      throw CLI::ValidationError("--t-check",
                                 "expected 'auto' or an integer in 1..10000");
    }
    run.adapt_t_check = false;
  }
  run.t_delete = o.t_delete;
  run.monitor_dual = o.monitor == "both";
  return run;
}

EstimateConfig make_estimate_config(const SimOpts& o, std::int64_t failures) {
  EstimateConfig ec;
  ec.target_failures =
      failures > 0 ? failures : std::numeric_limits<std::int64_t>::max();
  ec.max_blocks =
      o.blocks > 0 ? o.blocks : std::numeric_limits<std::int64_t>::max();
  ec.max_seconds = o.max_seconds;
  ec.workers = o.workers;
  return ec;
}

void require_stop_rule(const SimOpts& o, std::int64_t failures) {
  if (o.blocks <= 0 && failures <= 0 && o.max_seconds <= 0)
    throw CLI::ValidationError(
        "simulate", "need a stop rule: --blocks, --failures or --max-seconds");
}

// A failure target can never be met when nothing ever fails; refuse to spin.
void reject_static_infeasibility(const SimOpts& o, const ErrorModelParams& par,
                                 std::int64_t failures) {
  if (failures > 0 && o.blocks <= 0 && o.max_seconds <= 0 &&
      par.p_comp == 0 && par.p_loss == 0)
    throw InfeasibleError(
        "failure target unreachable: all error rates are zero and no block "
        "or time budget is set");
}

nlohmann::json run_config_json(const SimOpts& o, const RunConfig& run,
                               std::int64_t failures) {
  return {
      {"p_comp", o.p_comp},
      {"p_loss", o.p_loss},
      {"p_lint", o.p_lint},
      {"seed", o.seed},
      {"blocks", o.blocks},
      {"failures", failures},
      {"max_seconds", o.max_seconds},
      {"t_check", o.t_check},
      {"adapt_t_check", run.adapt_t_check},
      {"t_delete", run.t_delete},
      {"monitor", o.monitor},
      {"workers", o.workers},
      {"format", o.format},
  };
}

void report_rate(const EstimateResult& r) {
  std::ostringstream os;
  os << "wall " << fmt_g(r.wall_seconds) << " s";
  if (r.wall_seconds > 0)
    os << ", " << fmt_g(static_cast<double>(r.rounds) / r.wall_seconds)
       << " rounds/s";
  os << " (" << r.blocks << " blocks, " << r.rounds << " rounds, "
     << r.failures << " failures)";
  std::cerr << os.str() << '\n';
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateCmd {
  SimOpts o;
  int d = 0;
  std::string dump_clusters;

  int run_cmd() {
    require_distance(d);
    ErrorModelParams par{o.p_comp, o.p_loss, o.p_lint};
    par.validate();
    require_stop_rule(o, o.failures);
    reject_static_infeasibility(o, par, o.failures);
    if (!dump_clusters.empty() && o.blocks <= 0)
      throw CLI::ValidationError("--dump-clusters",
                                 "requires a --blocks budget");

    const RunConfig run = make_run_config(o);
    const EstimateConfig ec = make_estimate_config(o, o.failures);
    const LatticeGeometry geo(d);

    EstimateResult res = dump_clusters.empty()
                             ? estimate(geo, par, o.seed, run, ec)
                             : run_with_dump(geo, par, run);
    report_rate(res);

    nlohmann::json meta = {{"command", "simulate"},
                           {"version", kToolVersion},
                           {"d", d},
                           {"config", run_config_json(o, run, o.failures)}};
    std::string body;
    if (o.format == "csv") {
      nlohmann::json extras = result_json(d, par, o.seed, res);
      body = metadata_line(meta) + "\n" + metadata_line(extras) + "\n" +
             kResultHeader + "\n" + result_csv_row(d, par, o.seed, res) + "\n";
    } else {
      meta["results"] = result_json(d, par, o.seed, res);
      body = meta.dump(2) + "\n";
    }
    write_output(o.out, body);

    if (o.failures > 0 && res.failures < o.failures) {
      std::cerr << "failure target not reached (" << res.failures << " of "
                << o.failures << ")\n";
      return kExitInfeasible;
    }
    return kExitOk;
  }

  // Single chain, single worker: steps --blocks blocks and after each one
  // dumps the superstabilizer structure over the retained window of every
  // monitored lattice type as one JSON line (--t-check 1 for per-round
  // granularity).
  EstimateResult run_with_dump(const LatticeGeometry& geo,
                               const ErrorModelParams& par,
                               const RunConfig& run) {
    std::ofstream df(dump_clusters, std::ios::binary);
    if (!df)
      throw std::runtime_error("cannot open dump file: " + dump_clusters);
    WindowedRun chain(geo, par, o.seed, 0, run);
    EstimateResult res;
    const auto start = std::chrono::steady_clock::now();
    for (std::int64_t blk = 0; blk < o.blocks; ++blk) {
      BlockResult b = chain.step();
      res.blocks += 1;
      res.rounds += b.rounds;
      res.failures += (b.pauli_fail || b.loss_fail) ? 1 : 0;
      res.pauli_failures += b.pauli_fail ? 1 : 0;
      res.loss_failures += b.loss_fail ? 1 : 0;
      dump_block(df, geo, chain, blk);
    }
    res.trials = 1;
    res.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    return res;
  }

  void dump_block(std::ostream& df, const LatticeGeometry& geo,
                  const WindowedRun& chain, std::int64_t blk) {
    std::vector<CellType> types = {CellType::Primal};
    if (o.monitor == "both") types.push_back(CellType::Dual);
    for (CellType t : types) {
      const std::int64_t lo = chain.window_lo(t);
      const std::int64_t hi = chain.engine().next_round() - 1;
      LossClusters lc(geo, t, lo, hi);
      for (const RoundRecord& rec : chain.engine().records()) {
        if (rec.gen < lo || rec.gen > hi) continue;
        for (int sid : rec.losses) lc.add_loss(sid, rec.gen);
      }
      for (const RoundRecord& rec : chain.engine().records()) {
        if (rec.gen < lo || rec.gen > hi) continue;
        for (int sid : rec.flips) lc.add_flip(sid, rec.gen);
      }
      nlohmann::json line = {{"block", blk},
                             {"type", t == CellType::Primal ? "primal" : "dual"},
                             {"round_lo", lo},
                             {"round_hi", hi},
                             {"spanning", lc.spanning()}};
      for (const LossClusters::Component& c : lc.components()) {
        nlohmann::json cj;
        for (CellKey k : c.cells)
          cj["cells"].push_back({lc.round_of(k), lc.id_of(k)});
        cj["parity"] = c.parity & 1;
        cj["low_boundary"] = c.has_low;
        cj["high_boundary"] = c.has_high;
        cj["event"] = c.is_event();
        line["superstabilizers"].push_back(cj);
      }
      df << line.dump() << '\n';
    }
  }
};

// ---------------------------------------------------------------------------
// sweep

struct SweepCmd {
  SimOpts o;
  std::vector<int> ds;
  std::vector<double> p_losses;

  SweepCmd() { o.failures = 100; }

  int run_cmd() {
    for (int d : ds) require_distance(d);
    ErrorModelParams base{o.p_comp, 0.0, o.p_lint};
    for (double pl : p_losses) {
      base.p_loss = pl;
      base.validate();
    }
    require_stop_rule(o, o.failures);

    const RunConfig run = make_run_config(o);
    nlohmann::json cfg = run_config_json(o, run, o.failures);
    cfg.erase("p_loss");  // the grid above is authoritative
    nlohmann::json meta = {{"command", "sweep"},
                           {"version", kToolVersion},
                           {"d", ds},
                           {"p_loss", p_losses},
                           {"config", cfg}};

    std::ostringstream csv;
    csv << metadata_line(meta) << '\n' << kResultHeader << '\n';
    nlohmann::json points = nlohmann::json::array();
    bool all_reached = true;
    std::uint64_t row = 0;
    for (int d : ds) {
      const LatticeGeometry geo(d);
      for (double pl : p_losses) {
        ErrorModelParams par{o.p_comp, pl, o.p_lint};
        reject_static_infeasibility(o, par, o.failures);
        const std::uint64_t seed = o.seed + row++;
        EstimateResult res =
            estimate(geo, par, seed, run, make_estimate_config(o, o.failures));
        std::cerr << "d=" << d << " p_loss=" << fmt_g(pl) << ": ";
        report_rate(res);
        csv << result_csv_row(d, par, seed, res) << '\n';
        points.push_back(result_json(d, par, seed, res));
        if (o.failures > 0 && res.failures < o.failures) all_reached = false;
      }
    }

    if (o.format == "csv") {
      write_output(o.out, csv.str());
    } else {
      meta["points"] = points;
      write_output(o.out, meta.dump(2) + "\n");
    }
    if (!all_reached) {
      std::cerr << "failure target not reached on every grid point\n";
      return kExitInfeasible;
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// weights dump / lattice dump / derive-cell

struct WeightsCmd {
  int d = 0;
  double p_comp = 0, p_loss = 0, p_lint = 0;
  std::string type = "both";
  std::string out;

  int run_cmd() {
    require_distance(d);
    ErrorModelParams par{p_comp, p_loss, p_lint};
    par.validate();
    const LatticeGeometry geo(d);
    nlohmann::json meta = {{"command", "weights dump"},
                           {"version", kToolVersion},
                           {"d", d},
                           {"p_comp", p_comp},
                           {"p_loss", p_loss},
                           {"p_lint", p_lint},
                           {"type", type}};
    write_output(out, metadata_line(meta) + "\n" +
                          weights_csv(geo, par, type != "dual",
                                      type != "primal"));
    return kExitOk;
  }
};

struct LatticeCmd {
  int d = 0;
  std::string out;

  int run_cmd() {
    require_distance(d);
    nlohmann::json j = lattice_dump_json(LatticeGeometry(d));
    j["version"] = kToolVersion;
    write_output(out, j.dump(2) + "\n");
    return kExitOk;
  }
};

struct DeriveCellCmd {
  std::string format = "text";
  std::string out;

  int run_cmd() {
    if (format == "text") {
      write_output(out, derive_cell_text());
    } else {
      nlohmann::json j = derive_cell_json();
      j["version"] = kToolVersion;
      write_output(out, j.dump(2) + "\n");
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// overhead / extrapolate

struct OverheadCmd {
  std::string curves;
  double target = 0;
  int baseline_d = -1;
  std::string convention = "floor";
  int max_d = 499;
  std::string out;

  int run_cmd() {
    if (convention != "floor")
      throw CLI::ValidationError("--convention",
                                 "only the 'floor' distance-step convention "
                                 "is implemented");
    std::ifstream f(curves);
    if (!f) throw CLI::ValidationError("--curves", "cannot open " + curves);
    std::vector<CurvePoint> pts = parse_curve_csv(f);
    std::vector<OverheadRow> rows =
        overhead_table(pts, target, baseline_d, max_d);
    nlohmann::json meta = {{"command", "overhead"},
                           {"version", kToolVersion},
                           {"curves", curves},
                           {"target", target},
                           {"baseline_d", baseline_d},
                           {"convention", convention},
                           {"max_d", max_d}};
    write_output(out, metadata_line(meta) + "\n" + overhead_csv(rows));
    return kExitOk;
  }
};

struct ExtrapolateCmd {
  double a = 0, b = 0;
  int db = 0, d = 0;
  std::string out;

  int run_cmd() {
    write_output(out, fmt_g(extrapolate(a, b, db, d)) + "\n");
    return kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Monte Carlo simulator and analysis toolkit for a topological "
      "cluster-state memory under qubit loss"};
  app.set_version_flag("--version", kToolVersion);
  app.set_config("--config", "",
                 "Read options from a key=value config file (unknown keys "
                 "are rejected)");
  app.allow_config_extras(false);
  app.require_subcommand(1);

  SimulateCmd sim;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "Estimate the logical failure rate at one parameter point");
  c_sim->add_option("--d", sim.d, "Code distance (odd, >= 3)")->required();
  add_noise_options(c_sim, sim.o);
  c_sim->add_option("--p-loss", sim.o.p_loss,
                    "Loss probability per qubit per round")
      ->capture_default_str();
  add_run_options(c_sim, sim.o);
  c_sim->add_option("--dump-clusters", sim.dump_clusters,
                    "Write per-check superstabilizer structure as JSON lines "
                    "(single worker; requires --blocks)");

  SweepCmd swp;
  CLI::App* c_swp = app.add_subcommand(
      "sweep", "Estimate failure rates over a grid of p_loss and d");
  c_swp->add_option("--d", swp.ds, "Code distances (comma-separated)")
      ->required()
      ->delimiter(',');
  c_swp->add_option("--p-loss", swp.p_losses,
                    "Loss probabilities (comma-separated; may be empty)")
      ->delimiter(',');
  add_noise_options(c_swp, swp.o);
  add_run_options(c_swp, swp.o);

  WeightsCmd wgt;
  CLI::App* c_wgt =
      app.add_subcommand("weights", "Decoder weight-graph utilities");
  c_wgt->require_subcommand(1);
  CLI::App* c_wgtd = c_wgt->add_subcommand(
      "dump", "Emit the matching-graph edge template as CSV");
  c_wgtd->add_option("--d", wgt.d, "Code distance (odd, >= 3)")->required();
  c_wgtd->add_option("--p-comp", wgt.p_comp, "Computational error probability")
      ->capture_default_str();
  c_wgtd->add_option("--p-loss", wgt.p_loss, "Loss probability")
      ->capture_default_str();
  c_wgtd->add_option("--p-lint", wgt.p_lint, "Loss-interaction probability")
      ->capture_default_str();
  c_wgtd->add_option("--type", wgt.type, "Lattice type")
      ->check(CLI::IsMember({"primal", "dual", "both"}))
      ->capture_default_str();
  c_wgtd->add_option("--out", wgt.out, "Output file (default: stdout)");

  LatticeCmd lat;
  CLI::App* c_lat =
      app.add_subcommand("lattice", "Lattice geometry utilities");
  c_lat->require_subcommand(1);
  CLI::App* c_latd = c_lat->add_subcommand(
      "dump", "Emit sites, cells, adjacency and schedule as JSON");
  c_latd->add_option("--d", lat.d, "Code distance (odd, >= 3)")->required();
  c_latd->add_option("--out", lat.out, "Output file (default: stdout)");

  DeriveCellCmd dcl;
  CLI::App* c_dcl = app.add_subcommand(
      "derive-cell",
      "Derive the 18-qubit cell stabilizers and face measurement product");
  c_dcl->add_option("--format", dcl.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  c_dcl->add_option("--out", dcl.out, "Output file (default: stdout)");

  OverheadCmd ovh;
  CLI::App* c_ovh = app.add_subcommand(
      "overhead", "Project required distance and overhead from rate curves");
  c_ovh->add_option("--curves", ovh.curves, "Results CSV with d,p_loss,P_L")
      ->required();
  c_ovh->add_option("--target", ovh.target, "Target logical failure rate")
      ->required();
  c_ovh->add_option("--baseline-d", ovh.baseline_d,
                    "Baseline distance (default: derived from the p_loss=0 "
                    "curve)")
      ->capture_default_str();
  c_ovh->add_option("--convention", ovh.convention,
                    "Distance-step rounding convention")
      ->capture_default_str();
  c_ovh->add_option("--max-d", ovh.max_d, "Largest distance considered")
      ->capture_default_str();
  c_ovh->add_option("--out", ovh.out, "Output file (default: stdout)");

  ExtrapolateCmd xtr;
  CLI::App* c_xtr = app.add_subcommand(
      "extrapolate", "Project a failure-rate curve to a larger distance");
  c_xtr->add_option("--a", xtr.a, "Rate at the second-highest distance")
      ->required();
  c_xtr->add_option("--b", xtr.b, "Rate at the highest distance")->required();
  c_xtr->add_option("--db", xtr.db, "Highest simulated distance")->required();
  c_xtr->add_option("--d", xtr.d, "Target distance")->required();
  c_xtr->add_option("--out", xtr.out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
    if (c_sim->parsed()) return sim.run_cmd();
    if (c_swp->parsed()) return swp.run_cmd();
    if (c_wgt->parsed()) return wgt.run_cmd();
    if (c_lat->parsed()) return lat.run_cmd();
    if (c_dcl->parsed()) return dcl.run_cmd();
    if (c_ovh->parsed()) return ovh.run_cmd();
    if (c_xtr->parsed()) return xtr.run_cmd();
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);  // prints the error to stderr
    return kExitUsage;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::domain_error& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
