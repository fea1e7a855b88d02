#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tcsim/analysis.hpp"
#include "tcsim/pauli.hpp"

// Geometry and gate schedule of the three-dimensional cluster.
//
// Qubits sit on integer coordinates (x, y, t). Sites with two odd spatial
// coordinates or (one odd coordinate, odd t) are faces of one sublattice and
// edges of the other. Time advances in rounds; each round is six gate steps
// (two interleaved half-round generations). A generation of a qubit is one
// init -> 4 interaction slots -> measure lifecycle spanning six steps.
//
// The lattice is a distance-d block: x in [0, 2d], y in [0, 2d-2], unbounded
// in t. Primal cells (all-odd centers) form matching boundaries at the two
// y extremes; dual cells (all-even centers) at the two x extremes.

namespace tcsim {

// The six per-round site classes. The T classes are the "hub" faces normal to
// the time axis; X/Y classes are faces normal to that spatial axis.
//   PrimalT: (odd, odd,  t even)   primal face / dual edge
//   DualX:   (odd, even, t even)   dual face / primal edge
//   DualY:   (even, odd, t even)   dual face / primal edge
//   DualT:   (even, even, t odd)   dual face / primal edge
//   PrimalY: (odd, even, t odd)    primal face / dual edge
//   PrimalX: (even, odd, t odd)    primal face / dual edge
enum class SiteClass : std::uint8_t {
  PrimalT = 0,
  DualX = 1,
  DualY = 2,
  DualT = 3,
  PrimalY = 4,
  PrimalX = 5,
};
inline constexpr int kNumSiteClasses = 6;

// Sub-round: classes with even t are initialized/measured at step 0 of a
// round, classes with odd t at step 3.
inline constexpr bool class_is_late(SiteClass c) {
  return c == SiteClass::DualT || c == SiteClass::PrimalY ||
         c == SiteClass::PrimalX;
}

inline constexpr const char* class_name(SiteClass c) {
  constexpr const char* kNames[6] = {"primal_t", "dual_x",   "dual_y",
                                     "dual_t",   "primal_y", "primal_x"};
  return kNames[static_cast<int>(c)];
}

enum class CellType : std::uint8_t { Primal = 0, Dual = 1 };

// The cell type a site serves as a face of (it serves as an edge of the
// opposite type).
inline constexpr CellType face_type(SiteClass c) {
  return (c == SiteClass::PrimalT || c == SiteClass::PrimalY ||
          c == SiteClass::PrimalX)
             ? CellType::Primal
             : CellType::Dual;
}

struct QubitSite {
  SiteClass cls;
  int ix, iy;  // grid indices within the class
};

// Reference to a cell relative to some round. Virtual cells (beyond a
// matching boundary) carry id = -1 and the boundary side.
struct CellRef {
  CellType type;
  int id = -1;     // cell index within a layer; -1 for virtual
  int dgen = 0;    // cell round relative to the reference generation
  int side = 0;    // 0 = real; -1 = low boundary, +1 = high boundary
  bool real() const { return id >= 0; }
};

// One interaction slot of a site class: at which step it fires and who the
// partner is. Slots are listed in chronological order per class.
struct SlotSpec {
  int k;             // step within the executing round, 0..5
  int rho;           // executing round = generation + rho
  SiteClass partner;
  int dx, dy;        // physical coordinate offset to the partner
  int dgen;          // partner generation = own generation + dgen
  bool owner;        // exactly one side of every pairing owns the draw
};

// Chronological slot tables for all six classes. Derived from a global
// schedule in which every site runs init, four interaction slots (one step
// idle), and measurement within its six-step generation, and paired slots
// land on the same absolute step.
inline const std::array<std::array<SlotSpec, 4>, 6>& slot_tables() {
  static const std::array<std::array<SlotSpec, 4>, 6> kTables = {{
      // PrimalT
      {{{2, 0, SiteClass::DualX, 0, +1, 0, true},
        {3, 0, SiteClass::DualY, +1, 0, 0, true},
        {4, 0, SiteClass::DualY, -1, 0, 0, true},
        {5, 0, SiteClass::DualX, 0, -1, 0, true}}},
      // DualX
      {{{1, 0, SiteClass::PrimalY, 0, 0, -1, true},
        {2, 0, SiteClass::PrimalT, 0, -1, 0, false},
        {4, 0, SiteClass::PrimalY, 0, 0, 0, true},
        {5, 0, SiteClass::PrimalT, 0, +1, 0, false}}},
      // DualY
      {{{2, 0, SiteClass::PrimalX, 0, 0, -1, true},
        {3, 0, SiteClass::PrimalT, -1, 0, 0, false},
        {4, 0, SiteClass::PrimalT, +1, 0, 0, false},
        {5, 0, SiteClass::PrimalX, 0, 0, 0, true}}},
      // DualT
      {{{4, 0, SiteClass::PrimalX, 0, +1, 0, true},
        {0, +1, SiteClass::PrimalY, +1, 0, 0, true},
        {1, +1, SiteClass::PrimalX, 0, -1, 0, true},
        {2, +1, SiteClass::PrimalY, -1, 0, 0, true}}},
      // PrimalY
      {{{4, 0, SiteClass::DualX, 0, 0, 0, false},
        {0, +1, SiteClass::DualT, -1, 0, 0, false},
        {1, +1, SiteClass::DualX, 0, 0, +1, false},
        {2, +1, SiteClass::DualT, +1, 0, 0, false}}},
      // PrimalX
      {{{4, 0, SiteClass::DualT, 0, -1, 0, false},
        {5, 0, SiteClass::DualY, 0, 0, 0, false},
        {1, +1, SiteClass::DualT, 0, +1, 0, false},
        {2, +1, SiteClass::DualY, 0, 0, +1, false}}},
  }};
  return kTables;
}

struct Schedule;  // defined below

class LatticeGeometry {
 public:
  explicit LatticeGeometry(int d) : d_(d) {
    validate_distance(d);
    // Class grids: {x0, y0, nx, ny}.
    set_grid(SiteClass::PrimalT, 1, 1, d, d - 1);
    set_grid(SiteClass::DualX, 1, 0, d, d);
    set_grid(SiteClass::DualY, 2, 1, d - 1, d - 1);
    set_grid(SiteClass::DualT, 2, 0, d - 1, d);
    set_grid(SiteClass::PrimalY, 1, 0, d, d);
    set_grid(SiteClass::PrimalX, 2, 1, d - 1, d - 1);
    int off = 0;
    for (int c = 0; c < kNumSiteClasses; ++c) {
      offset_[c] = off;
      off += nx_[c] * ny_[c];
    }
    total_sites_ = off;
  }

  int d() const { return d_; }
  int num_sites() const { return total_sites_; }

  int site_id(SiteClass c, int ix, int iy) const {
    int ci = static_cast<int>(c);
    return offset_[ci] + ix * ny_[ci] + iy;
  }
  QubitSite site(int id) const {
    int c = kNumSiteClasses - 1;
    while (offset_[c] > id) --c;
    int rel = id - offset_[c];
    return {static_cast<SiteClass>(c), rel / ny_[c], rel % ny_[c]};
  }
  // Physical (x, y) of a site.
  std::pair<int, int> coords(const QubitSite& s) const {
    int c = static_cast<int>(s.cls);
    return {x0_[c] + 2 * s.ix, y0_[c] + 2 * s.iy};
  }
  int class_nx(SiteClass c) const { return nx_[static_cast<int>(c)]; }
  int class_ny(SiteClass c) const { return ny_[static_cast<int>(c)]; }
  int class_offset(SiteClass c) const { return offset_[static_cast<int>(c)]; }
  int class_count(SiteClass c) const {
    return nx_[static_cast<int>(c)] * ny_[static_cast<int>(c)];
  }

  // Partner site of a slot, or nullopt when the partner grid position does
  // not exist (a lattice-boundary identity slot).
  std::optional<int> slot_partner(const QubitSite& s, int slot) const {
    const SlotSpec& sp = slot_tables()[static_cast<int>(s.cls)][slot];
    auto [x, y] = coords(s);
    int px = x + sp.dx, py = y + sp.dy;
    int pc = static_cast<int>(sp.partner);
    int ix = (px - x0_[pc]) / 2, iy = (py - y0_[pc]) / 2;
    if (px < x0_[pc] || py < y0_[pc] || ix >= nx_[pc] || iy >= ny_[pc])
      return std::nullopt;
    return site_id(sp.partner, ix, iy);
  }

  // The partner's chronological slot index (0..3) of the pairing seen from
  // (sid, slot). The slot must have a partner.
  int back_slot(int sid, int slot) const {
    QubitSite s = site(sid);
    const SlotSpec& sp = slot_tables()[static_cast<int>(s.cls)][slot];
    auto partner = slot_partner(s, slot);
    if (!partner) throw std::logic_error("back_slot of an idle slot");
    QubitSite ps = site(*partner);
    for (int j = 0; j < 4; ++j) {
      const SlotSpec& bs = slot_tables()[static_cast<int>(ps.cls)][j];
      if (bs.partner != s.cls || bs.k != sp.k || bs.dgen != -sp.dgen) continue;
      if (sp.dgen + bs.rho != sp.rho) continue;
      auto q = slot_partner(ps, j);
      if (q && *q == sid) return j;
    }
    throw std::logic_error("slot tables are not reciprocal");
  }

  // ----- cells -----
  // Layer layout: primal cells (jx in [0, d-1], jy in [0, d-2]) with centers
  // (2jx+1, 2jy+1); dual cells (jx in [0, d-2], jy in [0, d-1]) with centers
  // (2jx+2, 2jy). Primal matching boundaries are the y extremes (low jy / high
  // jy), dual boundaries the x extremes (low jx / high jx).
  int cells_per_layer(CellType t) const {
    return d_ * (d_ - 1);
  }
  int cell_id(CellType t, int jx, int jy) const {
    return t == CellType::Primal ? jx * (d_ - 1) + jy : jx * d_ + jy;
  }
  std::pair<int, int> cell_grid(CellType t, int id) const {
    return t == CellType::Primal ? std::pair{id / (d_ - 1), id % (d_ - 1)}
                                 : std::pair{id / d_, id % d_};
  }
  // Cell position along its type's boundary axis (0 = low side); the high
  // side is boundary_rows()-1.
  int boundary_coord(CellType t, int id) const {
    auto [jx, jy] = cell_grid(t, id);
    return t == CellType::Primal ? jy : jx;
  }
  int boundary_rows() const { return d_ - 1; }

  // Faces of a cell: (site, generation offset) pairs relative to the cell
  // round. Interior cells have 6; cells against a same-type boundary have 5.
  struct FaceRef {
    int site;
    int dgen;
  };
  std::vector<FaceRef> cell_faces(CellType t, int id) const {
    auto [jx, jy] = cell_grid(t, id);
    std::vector<FaceRef> out;
    out.reserve(6);
    if (t == CellType::Dual) {
      out.push_back({site_id(SiteClass::DualX, jx, jy), 0});
      out.push_back({site_id(SiteClass::DualX, jx + 1, jy), 0});
      if (jy >= 1) out.push_back({site_id(SiteClass::DualY, jx, jy - 1), 0});
      if (jy <= d_ - 2) out.push_back({site_id(SiteClass::DualY, jx, jy), 0});
      out.push_back({site_id(SiteClass::DualT, jx, jy), -1});
      out.push_back({site_id(SiteClass::DualT, jx, jy), 0});
    } else {
      if (jx >= 1) out.push_back({site_id(SiteClass::PrimalX, jx - 1, jy), 0});
      if (jx <= d_ - 2) out.push_back({site_id(SiteClass::PrimalX, jx, jy), 0});
      out.push_back({site_id(SiteClass::PrimalY, jx, jy), 0});
      out.push_back({site_id(SiteClass::PrimalY, jx, jy + 1), 0});
      out.push_back({site_id(SiteClass::PrimalT, jx, jy), 0});
      out.push_back({site_id(SiteClass::PrimalT, jx, jy), +1});
    }
    return out;
  }

  // The two same-type cells a site is a face of, relative to its generation.
  std::array<CellRef, 2> own_cells(const QubitSite& s) const {
    auto ref = [&](CellType t, int jx, int jy, int dgen) {
      return make_ref(t, jx, jy, dgen);
    };
    switch (s.cls) {
      case SiteClass::PrimalT:
        return {ref(CellType::Primal, s.ix, s.iy, -1),
                ref(CellType::Primal, s.ix, s.iy, 0)};
      case SiteClass::DualX:
        return {ref(CellType::Dual, s.ix - 1, s.iy, 0),
                ref(CellType::Dual, s.ix, s.iy, 0)};
      case SiteClass::DualY:
        return {ref(CellType::Dual, s.ix, s.iy, 0),
                ref(CellType::Dual, s.ix, s.iy + 1, 0)};
      case SiteClass::DualT:
        return {ref(CellType::Dual, s.ix, s.iy, 0),
                ref(CellType::Dual, s.ix, s.iy, +1)};
      case SiteClass::PrimalY:
        return {ref(CellType::Primal, s.ix, s.iy - 1, 0),
                ref(CellType::Primal, s.ix, s.iy, 0)};
      case SiteClass::PrimalX:
        return {ref(CellType::Primal, s.ix, s.iy, 0),
                ref(CellType::Primal, s.ix + 1, s.iy, 0)};
    }
    throw std::logic_error("unreachable");
  }

  // The four opposite-type cells a site is an edge of.
  std::array<CellRef, 4> edge_cells(const QubitSite& s) const {
    auto ref = [&](CellType t, int jx, int jy, int dgen) {
      return make_ref(t, jx, jy, dgen);
    };
    switch (s.cls) {
      case SiteClass::PrimalT:
        return {ref(CellType::Dual, s.ix - 1, s.iy, 0),
                ref(CellType::Dual, s.ix - 1, s.iy + 1, 0),
                ref(CellType::Dual, s.ix, s.iy, 0),
                ref(CellType::Dual, s.ix, s.iy + 1, 0)};
      case SiteClass::DualX:
        return {ref(CellType::Primal, s.ix, s.iy - 1, -1),
                ref(CellType::Primal, s.ix, s.iy - 1, 0),
                ref(CellType::Primal, s.ix, s.iy, -1),
                ref(CellType::Primal, s.ix, s.iy, 0)};
      case SiteClass::DualY:
        return {ref(CellType::Primal, s.ix, s.iy, -1),
                ref(CellType::Primal, s.ix, s.iy, 0),
                ref(CellType::Primal, s.ix + 1, s.iy, -1),
                ref(CellType::Primal, s.ix + 1, s.iy, 0)};
      case SiteClass::DualT:
        return {ref(CellType::Primal, s.ix, s.iy - 1, 0),
                ref(CellType::Primal, s.ix, s.iy, 0),
                ref(CellType::Primal, s.ix + 1, s.iy - 1, 0),
                ref(CellType::Primal, s.ix + 1, s.iy, 0)};
      case SiteClass::PrimalY:
        return {ref(CellType::Dual, s.ix - 1, s.iy, 0),
                ref(CellType::Dual, s.ix - 1, s.iy, +1),
                ref(CellType::Dual, s.ix, s.iy, 0),
                ref(CellType::Dual, s.ix, s.iy, +1)};
      case SiteClass::PrimalX:
        return {ref(CellType::Dual, s.ix, s.iy, 0),
                ref(CellType::Dual, s.ix, s.iy, +1),
                ref(CellType::Dual, s.ix, s.iy + 1, 0),
                ref(CellType::Dual, s.ix, s.iy + 1, +1)};
    }
    throw std::logic_error("unreachable");
  }

  Schedule schedule_round(std::int64_t round) const;

 private:
  void set_grid(SiteClass c, int x0, int y0, int nx, int ny) {
    int ci = static_cast<int>(c);
    x0_[ci] = x0;
    y0_[ci] = y0;
    nx_[ci] = nx;
    ny_[ci] = ny;
  }
  CellRef make_ref(CellType t, int jx, int jy, int dgen) const {
    int nx = t == CellType::Primal ? d_ : d_ - 1;
    int ny = t == CellType::Primal ? d_ - 1 : d_;
    // Out-of-range along the boundary axis is a virtual boundary cell; any
    // other out-of-range would be a geometry bug.
    if (t == CellType::Primal) {
      if (jy < 0) return {t, -1, dgen, -1};
      if (jy >= ny) return {t, -1, dgen, +1};
    } else {
      if (jx < 0) return {t, -1, dgen, -1};
      if (jx >= nx) return {t, -1, dgen, +1};
    }
    if (jx < 0 || jx >= nx || jy < 0 || jy >= ny)
      throw std::logic_error("cell reference escaped the non-boundary axis");
    return {t, cell_id(t, jx, jy), dgen, 0};
  }

  int d_;
  int total_sites_ = 0;
  int x0_[6] = {}, y0_[6] = {}, nx_[6] = {}, ny_[6] = {}, offset_[6] = {};
};

inline LatticeGeometry build_lattice(int d) { return LatticeGeometry(d); }

// Materialized gate list of one round, ordered by step. Within a step the
// sub-order is: measurements, initializations, then interactions.
struct Schedule {
  struct SiteGen {
    int site;
    std::int64_t gen;
  };
  struct Interaction {
    int step_k;
    int site_a;       // owning side
    std::int64_t gen_a;
    int site_b;
    std::int64_t gen_b;
    int slot_a;       // chronological slot index on each side
    int slot_b;
  };
  struct IdleSlot {  // an interaction slot whose partner does not exist
    int step_k;
    int site;
    std::int64_t gen;
    int slot;
  };
  std::int64_t round = 0;
  std::vector<SiteGen> measures;  // filled for steps 0 and 3
  std::vector<SiteGen> inits;
  std::vector<Interaction> interactions;
  std::vector<IdleSlot> idles;
};

inline Schedule LatticeGeometry::schedule_round(std::int64_t round) const {
  Schedule sch;
  sch.round = round;
  for (int c = 0; c < kNumSiteClasses; ++c) {
    SiteClass cls = static_cast<SiteClass>(c);
    std::int64_t meas_gen = round - 1;
    for (int id = class_offset(cls); id < class_offset(cls) + class_count(cls);
         ++id) {
      if (meas_gen >= 0) sch.measures.push_back({id, meas_gen});
      sch.inits.push_back({id, round});
    }
  }
  for (int c = 0; c < kNumSiteClasses; ++c) {
    SiteClass cls = static_cast<SiteClass>(c);
    for (int slot = 0; slot < 4; ++slot) {
      const SlotSpec& sp = slot_tables()[c][slot];
      std::int64_t gen = round - sp.rho;
      if (gen < 0) continue;
      for (int rel = 0; rel < class_count(cls); ++rel) {
        int id = class_offset(cls) + rel;
        QubitSite s = site(id);
        auto partner = slot_partner(s, slot);
        std::int64_t pgen = partner ? gen + sp.dgen : -1;
        if (!partner || pgen < 0) {
          sch.idles.push_back({sp.k, id, gen, slot});
          continue;
        }
        if (!sp.owner) continue;  // the partner's iteration emits this pair
        // Find the partner's back-pointing slot index for bookkeeping.
        QubitSite ps = site(*partner);
        int back = -1;
        for (int j = 0; j < 4; ++j) {
          const SlotSpec& bs = slot_tables()[static_cast<int>(ps.cls)][j];
          if (bs.partner == cls && pgen + bs.rho == round && bs.k == sp.k) {
            auto q = slot_partner(ps, j);
            if (q && *q == id && pgen + bs.dgen == gen) {
              back = j;
              break;
            }
          }
        }
        if (back < 0) throw std::logic_error("slot tables are not reciprocal");
        sch.interactions.push_back({sp.k, id, gen, *partner, pgen, slot, back});
      }
    }
  }
  auto by_step = [](const auto& a, const auto& b) { return a.step_k < b.step_k; };
  std::stable_sort(sch.interactions.begin(), sch.interactions.end(), by_step);
  std::stable_sort(sch.idles.begin(), sch.idles.end(), by_step);
  return sch;
}

// ---------------------------------------------------------------------------
// The 18-qubit unit cell: 6 faces + 12 edges of one cell, as a standalone
// cluster graph (qubit indices 0..17 correspond to the conventional 1..18
// numbering). Faces are the degree-4 vertices.
inline ClusterGraph unit_cell_graph() {
  ClusterGraph g;
  g.n = 18;
  const int edges1[24][2] = {
      {1, 3},   {1, 17},  {2, 3},   {2, 10},  {3, 4},   {3, 5},
      {4, 14},  {5, 7},   {6, 7},   {6, 10},  {7, 8},   {7, 9},
      {8, 14},  {9, 12},  {10, 11}, {10, 16}, {11, 12}, {12, 13},
      {12, 15}, {13, 14}, {14, 18}, {15, 17}, {16, 17}, {17, 18},
  };
  for (auto& e : edges1)
    g.edges.push_back({static_cast<std::size_t>(e[0] - 1),
                       static_cast<std::size_t>(e[1] - 1)});
  return g;
}

// 0-based indices of the six face qubits of the unit cell.
inline std::vector<std::size_t> unit_cell_faces() {
  return {2, 6, 9, 11, 13, 16};
}

}  // namespace tcsim
