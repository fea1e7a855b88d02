#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "tcsim/lattice.hpp"
#include "tcsim/pauli.hpp"

using tcsim::CellRef;
using tcsim::CellType;
using tcsim::ClusterGraph;
using tcsim::LatticeGeometry;
using tcsim::PauliString;
using tcsim::QubitSite;
using tcsim::SiteClass;

namespace {

// The 18 cluster stabilizer generators of the unit cell, one per qubit.
const char* kCellGenerators[18] = {
    "X I Z I I I I I I I I I I I I I Z I",
    "I X Z I I I I I I Z I I I I I I I I",
    "Z Z X Z Z I I I I I I I I I I I I I",
    "I I Z X I I I I I I I I I Z I I I I",
    "I I Z I X I Z I I I I I I I I I I I",
    "I I I I I X Z I I Z I I I I I I I I",
    "I I I I Z Z X Z Z I I I I I I I I I",
    "I I I I I I Z X I I I I I Z I I I I",
    "I I I I I I Z I X I I Z I I I I I I",
    "I Z I I I Z I I I X Z I I I I Z I I",
    "I I I I I I I I I Z X Z I I I I I I",
    "I I I I I I I I Z I Z X Z I Z I I I",
    "I I I I I I I I I I I Z X Z I I I I",
    "I I I Z I I I Z I I I I Z X I I I Z",
    "I I I I I I I I I I I Z I I X I Z I",
    "I I I I I I I I I Z I I I I I X Z I",
    "Z I I I I I I I I I I I I I Z Z X Z",
    "I I I I I I I I I I I I I Z I I Z X",
};

const char* kFaceProduct = "I I X I I I X I I X I X I X I I X I";

// Absolute step offset of a slot within its class's generation timeline.
int slot_step(SiteClass c, int slot) {
  const tcsim::SlotSpec& sp = tcsim::slot_tables()[static_cast<int>(c)][slot];
  return 6 * sp.rho + sp.k;
}

// Whether (a, ga) and (b, gb) share an interaction slot.
bool interacts(const LatticeGeometry& geo, int a, std::int64_t ga, int b,
               std::int64_t gb) {
  QubitSite sa = geo.site(a);
  for (int j = 0; j < 4; ++j) {
    auto p = geo.slot_partner(sa, j);
    if (p && *p == b &&
        ga + tcsim::slot_tables()[static_cast<int>(sa.cls)][j].dgen == gb)
      return true;
  }
  return false;
}

}  // namespace

TEST_CASE("unit cell generators match the reference tables", "[lattice]") {
  auto gens = tcsim::cluster_stabilizers(tcsim::unit_cell_graph());
  REQUIRE(gens.size() == 18);
  for (int i = 0; i < 18; ++i) {
    CHECK(gens[i].letters(' ') == kCellGenerators[i]);
    CHECK(gens[i].canonical_phase() == 0);
  }

  // The six face generators (degree-4 vertices) multiply to pure X on the
  // faces: all edge Z factors cancel pairwise around the cell.
  auto faces = tcsim::unit_cell_faces();
  REQUIRE(faces.size() == 6);
  std::vector<PauliString> face_gens;
  for (auto f : faces) face_gens.push_back(gens[f]);
  PauliString prod = tcsim::stabilizer_product(face_gens);
  CHECK(prod.letters(' ') == kFaceProduct);
  CHECK(prod.canonical_phase() == 0);

  // Face qubits are exactly the degree-4 vertices.
  auto g = tcsim::unit_cell_graph();
  std::vector<int> degree(18, 0);
  for (auto [a, b] : g.edges) {
    ++degree[a];
    ++degree[b];
  }
  for (std::size_t q = 0; q < 18; ++q) {
    bool is_face = std::count(faces.begin(), faces.end(), q) > 0;
    CHECK(degree[q] == (is_face ? 4 : 2));
  }
}

TEST_CASE("lattice validation and counts", "[lattice]") {
  CHECK_THROWS_AS(tcsim::build_lattice(4), std::invalid_argument);
  CHECK_THROWS_AS(tcsim::build_lattice(2), std::invalid_argument);
  CHECK_THROWS_AS(tcsim::build_lattice(1), std::invalid_argument);
  CHECK_THROWS_AS(tcsim::build_lattice(-3), std::invalid_argument);

  for (int d : {3, 5, 7}) {
    LatticeGeometry geo(d);
    CHECK(geo.num_sites() == 2 * (3 * d * d - 3 * d + 1));
    CHECK(geo.class_count(SiteClass::PrimalT) == d * (d - 1));
    CHECK(geo.class_count(SiteClass::DualT) == d * (d - 1));
    CHECK(geo.class_count(SiteClass::DualX) == d * d);
    CHECK(geo.class_count(SiteClass::PrimalY) == d * d);
    CHECK(geo.class_count(SiteClass::DualY) == (d - 1) * (d - 1));
    CHECK(geo.class_count(SiteClass::PrimalX) == (d - 1) * (d - 1));
    CHECK(geo.cells_per_layer(CellType::Primal) == d * (d - 1));
    CHECK(geo.cells_per_layer(CellType::Dual) == d * (d - 1));
  }
}

TEST_CASE("site decode round trip and coordinate parities", "[lattice]") {
  LatticeGeometry geo(5);
  for (int id = 0; id < geo.num_sites(); ++id) {
    QubitSite s = geo.site(id);
    CHECK(geo.site_id(s.cls, s.ix, s.iy) == id);
    auto [x, y] = geo.coords(s);
    bool x_odd = x % 2 != 0, y_odd = y % 2 != 0;
    switch (s.cls) {
      case SiteClass::PrimalT: CHECK((x_odd && y_odd)); break;
      case SiteClass::DualX: CHECK((x_odd && !y_odd)); break;
      case SiteClass::DualY: CHECK((!x_odd && y_odd)); break;
      case SiteClass::DualT: CHECK((!x_odd && !y_odd)); break;
      case SiteClass::PrimalY: CHECK((x_odd && !y_odd)); break;
      case SiteClass::PrimalX: CHECK((!x_odd && y_odd)); break;
    }
    CHECK(x >= 0);
    CHECK(x <= 2 * geo.d());
    CHECK(y >= 0);
    CHECK(y <= 2 * geo.d() - 2);
  }
}

TEST_CASE("slot tables are chronological, reciprocal, conflict-free",
          "[lattice]") {
  LatticeGeometry geo(5);
  // Chronological order and distinct steps within each class.
  for (int c = 0; c < tcsim::kNumSiteClasses; ++c)
    for (int j = 1; j < 4; ++j)
      CHECK(slot_step(static_cast<SiteClass>(c), j) >
            slot_step(static_cast<SiteClass>(c), j - 1));

  // Each step of a round hosts at most one slot per class (otherwise one
  // site could be asked to do two things at once).
  for (int c = 0; c < tcsim::kNumSiteClasses; ++c) {
    std::set<int> ks;
    for (int j = 0; j < 4; ++j)
      ks.insert(tcsim::slot_tables()[c][j].k);
    CHECK(ks.size() == 4);
  }

  // Reciprocity: a slot's partner points back at the same absolute step with
  // exactly one owner per pair.
  for (int id = 0; id < geo.num_sites(); ++id) {
    QubitSite s = geo.site(id);
    int c = static_cast<int>(s.cls);
    for (int j = 0; j < 4; ++j) {
      auto p = geo.slot_partner(s, j);
      if (!p) continue;
      const tcsim::SlotSpec& sp = tcsim::slot_tables()[c][j];
      QubitSite ps = geo.site(*p);
      int found = 0;
      for (int jb = 0; jb < 4; ++jb) {
        const tcsim::SlotSpec& bs =
            tcsim::slot_tables()[static_cast<int>(ps.cls)][jb];
        auto q = geo.slot_partner(ps, jb);
        if (!q || *q != id) continue;
        // Same absolute step: gen_a + rho_a == gen_b + rho_b with
        // gen_b = gen_a + dgen_a, and the same k.
        if (bs.k == sp.k && sp.dgen + bs.rho == sp.rho && bs.dgen == -sp.dgen) {
          ++found;
          CHECK(sp.owner != bs.owner);
        }
      }
      CHECK(found == 1);
    }
  }
}

TEST_CASE("round schedule covers every slot exactly once", "[lattice]") {
  LatticeGeometry geo(3);
  tcsim::Schedule sch = geo.schedule_round(5);

  CHECK(sch.measures.size() == static_cast<std::size_t>(geo.num_sites()));
  CHECK(sch.inits.size() == static_cast<std::size_t>(geo.num_sites()));
  for (auto& m : sch.measures) CHECK(m.gen == 4);
  for (auto& i : sch.inits) CHECK(i.gen == 5);

  // Every class contributes each of its four slots once per round, so the
  // total number of slot instances is 4 per site per round.
  CHECK(2 * sch.interactions.size() + sch.idles.size() ==
        4 * static_cast<std::size_t>(geo.num_sites()));

  // No site acts twice in one step.
  std::set<std::pair<int, int>> used;  // (step, site)
  for (auto& g : sch.interactions) {
    CHECK(used.insert({g.step_k, g.site_a}).second);
    CHECK(used.insert({g.step_k, g.site_b}).second);
  }
  for (auto& g : sch.idles) CHECK(used.insert({g.step_k, g.site}).second);

  // Idle slots only occur where a lattice boundary removes the partner (the
  // first rounds also idle slots whose partner generation predates round 0).
  for (auto& g : sch.idles)
    CHECK(!geo.slot_partner(geo.site(g.site), g.slot).has_value());
}

TEST_CASE("cell faces and reverse maps agree", "[lattice]") {
  for (int d : {3, 5}) {
    LatticeGeometry geo(d);
    for (int t = 0; t < 2; ++t) {
      CellType type = static_cast<CellType>(t);
      for (int id = 0; id < geo.cells_per_layer(type); ++id) {
        auto faces = geo.cell_faces(type, id);
        auto [jx, jy] = geo.cell_grid(type, id);
        bool truncated = type == CellType::Primal
                             ? (jx == 0 || jx == d - 1)
                             : (jy == 0 || jy == d - 1);
        CHECK(faces.size() == (truncated ? 5u : 6u));
        for (auto f : faces) {
          // The face's own-cell list must contain this cell with the
          // complementary generation offset.
          auto own = geo.own_cells(geo.site(f.site));
          int hits = 0;
          for (auto& c : own)
            if (c.real() && c.type == type && c.id == id && c.dgen == -f.dgen)
              ++hits;
          CHECK(hits == 1);
        }
      }
    }
  }
}

TEST_CASE("own and edge cell references are well-formed", "[lattice]") {
  LatticeGeometry geo(5);
  int d = 5;
  // Count, for each cell, how many sites call it an edge cell.
  std::map<std::pair<int, int>, int> edge_hits;  // (type, id) -> count
  for (int id = 0; id < geo.num_sites(); ++id) {
    QubitSite s = geo.site(id);
    auto own = geo.own_cells(s);
    auto edge = geo.edge_cells(s);
    // Own cells are same-type; edge cells opposite-type.
    bool primal_face = s.cls == SiteClass::PrimalT ||
                       s.cls == SiteClass::PrimalX ||
                       s.cls == SiteClass::PrimalY;
    for (auto& c : own)
      CHECK(c.type == (primal_face ? CellType::Primal : CellType::Dual));
    for (auto& c : edge)
      CHECK(c.type == (primal_face ? CellType::Dual : CellType::Primal));
    // At most one of the two own cells can be virtual, and virtual references
    // only occur against the type's own boundary sides.
    int virt = 0;
    for (auto& c : own)
      if (!c.real()) {
        ++virt;
        CHECK(c.side != 0);
      }
    CHECK(virt <= 1);
    for (auto& c : edge)
      if (c.real()) ++edge_hits[{static_cast<int>(c.type), c.id}];
  }
  // Interior cells are edged by exactly 12 sites.
  for (int t = 0; t < 2; ++t) {
    CellType type = static_cast<CellType>(t);
    for (int id = 0; id < geo.cells_per_layer(type); ++id) {
      auto [jx, jy] = geo.cell_grid(type, id);
      bool interior = jx > 0 && jy > 0 &&
                      (type == CellType::Primal ? (jx < d - 1 && jy < d - 2)
                                                : (jx < d - 2 && jy < d - 1));
      int hits = edge_hits[{t, id}];
      if (interior) CHECK(hits == 12);
      CHECK(hits >= 7);
      CHECK(hits <= 12);
    }
  }
}

TEST_CASE("one lattice cell builds the unit cell cluster", "[lattice]") {
  LatticeGeometry geo(5);
  // An interior dual cell away from all boundaries, at a bulk round.
  int id = geo.cell_id(CellType::Dual, 1, 2);
  std::int64_t rc = 4;

  // Gather the 18 (site, gen) qubits: 6 faces + 12 edges.
  std::vector<std::pair<int, std::int64_t>> nodes;
  for (auto f : geo.cell_faces(CellType::Dual, id))
    nodes.push_back({f.site, rc + f.dgen});
  std::size_t n_faces = nodes.size();
  REQUIRE(n_faces == 6);
  for (int sid = 0; sid < geo.num_sites(); ++sid) {
    QubitSite s = geo.site(sid);
    for (auto& c : geo.edge_cells(s)) {
      if (!c.real() || c.type != CellType::Dual || c.id != id) continue;
      // The cell sits at the edge site's generation + dgen, so the edge's
      // generation is rc - dgen.
      nodes.push_back({sid, rc - c.dgen});
    }
  }
  REQUIRE(nodes.size() == 18);

  // Interaction edges within the 18 qubits reproduce the unit cell: each
  // face interacts with 4 edges, each edge with 2 faces.
  ClusterGraph g;
  g.n = 18;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (interacts(geo, nodes[i].first, nodes[i].second, nodes[j].first,
                    nodes[j].second))
        g.edges.push_back({i, j});
  REQUIRE(g.edges.size() == 24);
  std::vector<int> deg(18, 0);
  for (auto [a, b] : g.edges) {
    ++deg[a];
    ++deg[b];
  }
  for (std::size_t q = 0; q < 18; ++q) CHECK(deg[q] == (q < n_faces ? 4 : 2));

  // The product of the six face stabilizers is pure X on the faces — the
  // deterministic +1 measurement product the syndrome extraction relies on.
  auto gens = tcsim::cluster_stabilizers(g);
  std::vector<PauliString> face_gens(gens.begin(), gens.begin() + 6);
  PauliString prod = tcsim::stabilizer_product(face_gens);
  CHECK(prod.canonical_phase() == 0);
  for (std::size_t q = 0; q < 18; ++q)
    CHECK(prod.letter(q) == (q < n_faces ? 'X' : 'I'));
}

TEST_CASE("primal to dual isomorphism maps cells onto cells", "[lattice]") {
  int d = 5;
  LatticeGeometry geo(d);

  // (x, y, t) of a (site, gen).
  auto pos = [&](int sid, std::int64_t gen) {
    QubitSite s = geo.site(sid);
    auto [x, y] = geo.coords(s);
    std::int64_t t = 2 * gen + (tcsim::class_is_late(s.cls) ? 1 : 0);
    return std::tuple<int, int, std::int64_t>(x, y, t);
  };
  // Inverse: find the (site, gen) at a position.
  auto locate = [&](int x, int y, std::int64_t t) {
    for (int c = 0; c < tcsim::kNumSiteClasses; ++c) {
      SiteClass cls = static_cast<SiteClass>(c);
      std::int64_t gen = tcsim::class_is_late(cls) ? (t - 1) / 2 : t / 2;
      std::int64_t tt = 2 * gen + (tcsim::class_is_late(cls) ? 1 : 0);
      if (tt != t) continue;
      for (int rel = 0; rel < geo.class_count(cls); ++rel) {
        int sid = geo.class_offset(cls) + rel;
        auto [sx, sy] = geo.coords(geo.site(sid));
        if (sx == x && sy == y)
          return std::pair<int, std::int64_t>(sid, gen);
      }
    }
    throw std::runtime_error("no site at mapped position");
  };

  std::int64_t rc = 4;
  for (int id = 0; id < geo.cells_per_layer(CellType::Primal); ++id) {
    // Primal cell (center (2jx+1, 2jy+1, 2rc+1)) maps to the dual cell at
    // (2jy+2, 2jx, 2rc+2) under (x, y, t) -> (y+1, x-1, t+1).
    auto [jx, jy] = geo.cell_grid(CellType::Primal, id);
    int dual_id = geo.cell_id(CellType::Dual, jy, jx);
    std::set<std::tuple<int, int, std::int64_t>> mapped;
    for (auto f : geo.cell_faces(CellType::Primal, id)) {
      auto [x, y, t] = pos(f.site, rc + f.dgen);
      mapped.insert({y + 1, x - 1, t + 1});
    }
    std::set<std::tuple<int, int, std::int64_t>> expect;
    for (auto f : geo.cell_faces(CellType::Dual, dual_id)) {
      auto [x, y, t] = pos(f.site, (rc + 1) + f.dgen);
      expect.insert({x, y, t});
    }
    CHECK(mapped == expect);
    // Sanity: the mapped positions identify real sites.
    for (auto [x, y, t] : mapped) CHECK_NOTHROW(locate(x, y, t));
  }
}
