#pragma once

#include <charconv>
#include <cstdio>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcsim/analysis.hpp"
#include "tcsim/decoder.hpp"
#include "tcsim/montecarlo.hpp"
#include "tcsim/pauli.hpp"
#include "tcsim/stats.hpp"

namespace tcsim {

inline constexpr const char* kToolVersion = "tcs 0.1.0";

// Shortest decimal form that round-trips, stable across runs.
inline std::string fmt_g(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// ---------------------------------------------------------------------------
// Simulation results

inline constexpr const char* kResultHeader =
    "d,p_comp,p_loss,p_lint,rounds,failures,P_L,ci_low,ci_high,seed";

// Headline logical error rate: failures per noisy round. The per-d-rounds
// value is carried in metadata.
inline double p_l_per_round(const EstimateResult& r) {
  return r.rounds > 0 ? static_cast<double>(r.failures) /
                            static_cast<double>(r.rounds)
                      : 0.0;
}

// Wilson 95% interval on the per-block failure probability, rescaled to a
// per-round rate by the average block length.
inline Interval p_l_interval_per_round(const EstimateResult& r) {
  if (r.rounds <= 0 || r.blocks <= 0) return {0.0, 1.0};
  Interval pb = wilson_interval(static_cast<std::uint64_t>(r.failures),
                                static_cast<std::uint64_t>(r.blocks));
  const double scale =
      static_cast<double>(r.blocks) / static_cast<double>(r.rounds);
  return {pb.lo * scale, pb.hi * scale};
}

inline std::string result_csv_row(int d, const ErrorModelParams& par,
                                  std::uint64_t seed,
                                  const EstimateResult& r) {
  Interval iv = p_l_interval_per_round(r);
  std::ostringstream os;
  os << d << ',' << fmt_g(par.p_comp) << ',' << fmt_g(par.p_loss) << ','
     << fmt_g(par.p_lint) << ',' << r.rounds << ',' << r.failures << ','
     << fmt_g(p_l_per_round(r)) << ',' << fmt_g(iv.lo) << ',' << fmt_g(iv.hi)
     << ',' << seed;
  return os.str();
}

inline nlohmann::json result_json(int d, const ErrorModelParams& par,
                                  std::uint64_t seed,
                                  const EstimateResult& r) {
  Interval iv = p_l_interval_per_round(r);
  const double plr = p_l_per_round(r);
  return {
      {"d", d},
      {"p_comp", par.p_comp},
      {"p_loss", par.p_loss},
      {"p_lint", par.p_lint},
      {"seed", seed},
      {"blocks", r.blocks},
      {"rounds", r.rounds},
      {"trials", r.trials},
      {"failures", r.failures},
      {"pauli_failures", r.pauli_failures},
      {"loss_failures", r.loss_failures},
      {"timed_out", r.timed_out},
      {"p_l_per_block", r.blocks > 0 ? static_cast<double>(r.failures) /
                                           static_cast<double>(r.blocks)
                                     : 0.0},
      {"p_l_per_round", plr},
      {"p_l_per_d_rounds", plr * d},
      {"ci_low", iv.lo},
      {"ci_high", iv.hi},
  };
}

// A '#'-prefixed metadata line carrying a compact JSON object. Keys are
// emitted sorted, so identical configs serialize identically.
inline std::string metadata_line(const nlohmann::json& j) {
  return "# " + j.dump();
}

// ---------------------------------------------------------------------------
// Cell-derivation report

namespace detail {
inline std::string spaced_pauli(const PauliString& p) {
  static constexpr const char* kSign[4] = {"", "i ", "- ", "-i "};
  return std::string(kSign[p.canonical_phase()]) + p.letters(' ');
}

inline std::vector<PauliString> face_generators(
    const std::vector<PauliString>& gens) {
  std::vector<PauliString> out;
  for (std::size_t q : unit_cell_faces()) out.push_back(gens[q]);
  return out;
}

inline ClusterGraph five_star_graph() {
  return ClusterGraph{5, {{0, 2}, {1, 2}, {2, 3}, {2, 4}}};
}
}  // namespace detail

inline std::string derive_cell_text() {
  const std::vector<PauliString> gens = cluster_stabilizers(unit_cell_graph());
  std::ostringstream os;
  os << "Cell stabilizer generators (18 qubits; face qubits";
  for (std::size_t q : unit_cell_faces()) os << ' ' << q + 1;
  os << "):\n";
  for (std::size_t i = 0; i < gens.size(); ++i)
    os << "A_" << i + 1 << ": " << detail::spaced_pauli(gens[i]) << '\n';
  os << "\nProduct of the face-qubit generators:\n";
  os << "A: "
     << detail::spaced_pauli(stabilizer_product(detail::face_generators(gens)))
     << '\n';
  os << "\nFive-qubit star (hub 3): initialization generators and their "
        "cluster forms:\n";
  const std::vector<PauliString> star =
      cluster_stabilizers(detail::five_star_graph());
  for (std::size_t i = 0; i < star.size(); ++i) {
    PauliString init(5);
    init.set_x(i, true);
    os << "K_" << i + 1 << ": " << detail::spaced_pauli(init) << " -> "
       << detail::spaced_pauli(star[i]) << '\n';
  }
  return os.str();
}

inline nlohmann::json derive_cell_json() {
  const std::vector<PauliString> gens = cluster_stabilizers(unit_cell_graph());
  nlohmann::json j;
  for (const PauliString& g : gens) j["generators"].push_back(g.letters());
  for (std::size_t q : unit_cell_faces())
    j["face_qubits"].push_back(q + 1);
  j["face_product"] =
      stabilizer_product(detail::face_generators(gens)).letters();
  nlohmann::json star;
  star["hub"] = 3;
  for (auto [a, b] : detail::five_star_graph().edges)
    star["edges"].push_back({a + 1, b + 1});
  const std::vector<PauliString> sg =
      cluster_stabilizers(detail::five_star_graph());
  for (std::size_t i = 0; i < sg.size(); ++i) {
    PauliString init(5);
    init.set_x(i, true);
    star["initial"].push_back(init.letters());
    star["cluster"].push_back(sg[i].letters());
  }
  j["star"] = star;
  return j;
}

// ---------------------------------------------------------------------------
// Lattice description

inline nlohmann::json lattice_dump_json(const LatticeGeometry& geo) {
  nlohmann::json j;
  j["d"] = geo.d();
  j["boundary_rows"] = geo.boundary_rows();
  j["num_sites"] = geo.num_sites();

  auto cell_ref_json = [](const CellRef& r) {
    nlohmann::json c;
    c["type"] = r.type == CellType::Primal ? "primal" : "dual";
    c["dgen"] = r.dgen;
    if (r.real())
      c["id"] = r.id;
    else
      c["boundary"] = r.side < 0 ? "low" : "high";
    return c;
  };

  for (int ci = 0; ci < kNumSiteClasses; ++ci) {
    const SiteClass cls = static_cast<SiteClass>(ci);
    nlohmann::json sc;
    sc["name"] = class_name(cls);
    sc["face_of"] = face_type(cls) == CellType::Primal ? "primal" : "dual";
    sc["grid"] = {geo.class_nx(cls), geo.class_ny(cls)};
    sc["first_site"] = geo.class_offset(cls);
    sc["measure_step"] = class_is_late(cls) ? 3 : 0;
    for (const SlotSpec& sp : slot_tables()[ci]) {
      nlohmann::json slot;
      slot["step"] = sp.k;
      slot["round_offset"] = sp.rho;
      slot["partner_class"] = class_name(sp.partner);
      slot["dx"] = sp.dx;
      slot["dy"] = sp.dy;
      slot["partner_generation_offset"] = sp.dgen;
      slot["owns_draw"] = sp.owner;
      sc["slots"].push_back(slot);
    }
    j["site_classes"].push_back(sc);
  }

  for (int sid = 0; sid < geo.num_sites(); ++sid) {
    const QubitSite s = geo.site(sid);
    auto [x, y] = geo.coords(s);
    nlohmann::json sj;
    sj["id"] = sid;
    sj["class"] = class_name(s.cls);
    sj["ix"] = s.ix;
    sj["iy"] = s.iy;
    sj["x"] = x;
    sj["y"] = y;
    for (const CellRef& r : geo.own_cells(s))
      sj["face_of_cells"].push_back(cell_ref_json(r));
    for (const CellRef& r : geo.edge_cells(s))
      sj["edge_of_cells"].push_back(cell_ref_json(r));
    j["sites"].push_back(sj);
  }

  for (CellType t : {CellType::Primal, CellType::Dual}) {
    nlohmann::json ct;
    ct["per_layer"] = geo.cells_per_layer(t);
    ct["boundary_axis"] = t == CellType::Primal ? "y" : "x";
    for (int id = 0; id < geo.cells_per_layer(t); ++id) {
      auto [jx, jy] = geo.cell_grid(t, id);
      nlohmann::json cj;
      cj["id"] = id;
      cj["jx"] = jx;
      cj["jy"] = jy;
      cj["boundary_coord"] = geo.boundary_coord(t, id);
      for (const LatticeGeometry::FaceRef& f : geo.cell_faces(t, id)) {
        nlohmann::json fj;
        fj["site"] = f.site;
        fj["dgen"] = f.dgen;
        cj["faces"].push_back(fj);
      }
      ct["cells"].push_back(cj);
    }
    j["cell_layers"][t == CellType::Primal ? "primal" : "dual"] = ct;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Weight-template audit dump

inline constexpr const char* kWeightsHeader =
    "type,id_a,id_b,dr,side,probability,weight";

inline std::string weights_csv(const LatticeGeometry& geo,
                               const ErrorModelParams& par, bool primal,
                               bool dual) {
  std::ostringstream os;
  os << kWeightsHeader << '\n';
  auto emit = [&](CellType t) {
    const WeightTemplate tpl = build_weight_template(geo, par, t);
    const char* name = t == CellType::Primal ? "primal" : "dual";
    for (const TemplateEdge& e : tpl.edges) {
      os << name << ',' << e.id_a << ',';
      if (e.id_b >= 0)
        os << e.id_b;
      os << ',' << e.dr << ',';
      if (e.id_b < 0) os << (e.side < 0 ? "low" : "high");
      os << ',' << fmt_g(e.q) << ',' << e.weight << '\n';
    }
  };
  if (primal) emit(CellType::Primal);
  if (dual) emit(CellType::Dual);
  return os.str();
}

// ---------------------------------------------------------------------------
// Overhead projection table

inline constexpr const char* kOverheadHeader =
    "overhead,p_loss,d,q_phys,volume,reachable";

inline std::string overhead_csv(const std::vector<OverheadRow>& rows) {
  std::ostringstream os;
  os << kOverheadHeader << '\n';
  for (const OverheadRow& r : rows) {
    if (r.reachable) os << fmt_g(r.overhead);
    os << ',';
    if (r.has_p_loss) os << fmt_g(r.p_loss);
    os << ',';
    if (r.reachable)
      os << r.d << ',' << r.q_phys << ',' << r.volume;
    else
      os << ",,";
    os << ',' << (r.reachable ? "true" : "false") << '\n';
  }
  return os.str();
}

// Parse measured curve points back out of a results CSV ('#' lines skipped;
// columns located by name from the header row).
inline std::vector<CurvePoint> parse_curve_csv(std::istream& in) {
  std::vector<CurvePoint> out;
  std::string line;
  int col_d = -1, col_pl = -1, col_rate = -1;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    f.push_back(cur);
    return f;
  };
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
      line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f = split(line);
    if (col_d < 0) {
      for (int i = 0; i < static_cast<int>(f.size()); ++i) {
        if (f[i] == "d") col_d = i;
        if (f[i] == "p_loss") col_pl = i;
        if (f[i] == "P_L") col_rate = i;
      }
      if (col_d < 0 || col_pl < 0 || col_rate < 0)
        throw std::invalid_argument(
            "curve CSV header needs columns d, p_loss, P_L");
      continue;
    }
    const int need = std::max(col_d, std::max(col_pl, col_rate));
    if (static_cast<int>(f.size()) <= need)
      throw std::invalid_argument("curve CSV row has too few columns");
    CurvePoint c;
    c.d = std::stoi(f[col_d]);
    c.p_loss = std::stod(f[col_pl]);
    c.p_l = std::stod(f[col_rate]);
    out.push_back(c);
  }
  return out;
}

}  // namespace tcsim
