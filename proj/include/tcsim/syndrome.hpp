#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "tcsim/lattice.hpp"

namespace tcsim {

// Dense integer handle of one parity cell: round * cells_per_layer + id.
// The two boundary markers of the monitored type use negative keys.
using CellKey = std::int64_t;

// Sparse union-find over the parity cells of one cell type within a window
// of completed rounds. Qubit losses merge the cells they break into
// superstabilizers (cells beyond a lattice boundary merge with that
// boundary's marker), and measurement flips toggle component parities.
// Untracked cells are implicit even singletons.
class LossClusters {
 public:
  static constexpr CellKey kLowKey = -1;
  static constexpr CellKey kHighKey = -2;

  LossClusters(const LatticeGeometry& geo, CellType type,
               std::int64_t round_lo, std::int64_t round_hi)
      : geo_(&geo),
        type_(type),
        cpl_(geo.cells_per_layer(type)),
        lo_(round_lo),
        hi_(round_hi) {}

  CellType type() const { return type_; }
  std::int64_t round_lo() const { return lo_; }
  std::int64_t round_hi() const { return hi_; }

  CellKey cell_key(std::int64_t round, int id) const {
    return round * cpl_ + id;
  }
  static CellKey marker(int side) { return side < 0 ? kLowKey : kHighKey; }
  static bool is_marker(CellKey k) { return k < 0; }
  std::int64_t round_of(CellKey k) const { return k / cpl_; }
  int id_of(CellKey k) const { return static_cast<int>(k % cpl_); }
  int row_of(CellKey k) const {
    return geo_->boundary_coord(type_, id_of(k));
  }

  // Key of a cell reference seen from generation `gen`; nullopt when the
  // referenced round falls outside the completed window.
  std::optional<CellKey> ref_key(const CellRef& ref, std::int64_t gen) const {
    if (!ref.real()) return marker(ref.side);
    std::int64_t rc = gen + ref.dgen;
    if (rc < lo_ || rc > hi_) return std::nullopt;
    return cell_key(rc, ref.id);
  }

  // Merges the two cells of this type that lost qubit (site, gen) is a face
  // of. A qubit enters the measurement product only of the cells it is a
  // face of -- on the other lattice type it sits on cell edges, where the
  // dangling entanglement factors cancel pairwise -- so a loss breaks
  // nothing on the type it is an edge of.
  void add_loss(int site, std::int64_t gen) {
    QubitSite s = geo_->site(site);
    if (face_type(s.cls) != type_) return;
    bool have_prev = false;
    CellKey prev = 0;
    for (const CellRef& ref : geo_->own_cells(s)) {
      auto k = ref_key(ref, gen);
      if (!k) continue;
      if (have_prev) unite(prev, *k);
      prev = *k;
      have_prev = true;
    }
  }

  // Toggles the parities of the (up to two) cells of this type whose
  // measurement product qubit (site, gen) participates in as a face.
  void add_flip(int site, std::int64_t gen) {
    QubitSite s = geo_->site(site);
    if (face_type(s.cls) != type_) return;
    for (const CellRef& ref : geo_->own_cells(s))
      if (auto k = ref_key(ref, gen)) toggle(*k);
  }

  // External structure injection: merges two keys / toggles a key's parity
  // directly. Lets a caller replay superstabilizer state that formed before
  // round_lo (merges and toggles contributed by records it has discarded)
  // into this window.
  void merge(CellKey a, CellKey b) { unite(a, b); }
  void toggle_cell(CellKey k) { toggle(k); }

  // Union-find lookup; unseen keys are their own roots.
  CellKey find(CellKey k) {
    auto it = parent_.find(k);
    if (it == parent_.end()) return k;
    CellKey root = find(it->second);
    it->second = root;
    return root;
  }
  bool same(CellKey a, CellKey b) { return find(a) == find(b); }

  // Whether the component of `ref` (seen from `gen`) contains the boundary
  // marker of `side`. Out-of-window references never do.
  bool touches_marker(const CellRef& ref, std::int64_t gen, int side) {
    auto k = ref_key(ref, gen);
    return k && same(*k, marker(side));
  }

  struct Component {
    std::vector<CellKey> cells;  // real member cells, sorted
    int parity = 0;              // XOR of member cell measurement parities
    bool has_low = false, has_high = false;
    int min_row = std::numeric_limits<int>::max(), max_row = -1;
    std::int64_t min_round = std::numeric_limits<std::int64_t>::max();
    std::int64_t max_round = -1;

    bool has_marker() const { return has_low || has_high; }
    bool is_event() const { return !has_marker() && (parity & 1); }
    bool spans(int far_row) const {
      return (has_low && has_high) || (has_low && max_row == far_row) ||
             (has_high && min_row == 0);
    }
  };

  // All touched components, deterministically ordered: marker components
  // first (low before high), then by smallest member cell.
  std::vector<Component> components() {
    std::vector<std::pair<CellKey, Component>> out;
    for (auto& [k, info] : info_) {
      if (parent_.find(k) != parent_.end()) continue;  // not a root
      Component c = info;
      std::sort(c.cells.begin(), c.cells.end());
      CellKey order = c.has_low     ? kLowKey
                      : c.has_high  ? kHighKey
                      : c.cells.empty() ? std::numeric_limits<CellKey>::max()
                                        : c.cells.front();
      out.push_back({order, std::move(c)});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      if (is_marker(a.first) != is_marker(b.first)) return is_marker(a.first);
      if (is_marker(a.first)) return a.first > b.first;  // low (-1) first
      return a.first < b.first;
    });
    std::vector<Component> comps;
    comps.reserve(out.size());
    for (auto& [k, c] : out) comps.push_back(std::move(c));
    return comps;
  }

  // Member cells of the component rooted at `root` (which must be a root).
  // Untracked singletons own just themselves.
  std::vector<CellKey> members(CellKey root) {
    auto it = info_.find(root);
    if (it == info_.end())
      return is_marker(root) ? std::vector<CellKey>{}
                             : std::vector<CellKey>{root};
    return it->second.cells;
  }

  bool spanning() {
    const int far = geo_->boundary_rows() - 1;
    for (auto& [k, info] : info_) {
      if (parent_.find(k) != parent_.end()) continue;
      if (info.spans(far)) return true;
    }
    return false;
  }

 private:
  Component& ensure_info(CellKey k) {
    auto it = info_.find(k);
    if (it != info_.end()) return it->second;
    Component c;
    if (k == kLowKey) {
      c.has_low = true;
    } else if (k == kHighKey) {
      c.has_high = true;
    } else {
      c.cells.push_back(k);
      c.min_row = c.max_row = row_of(k);
      c.min_round = c.max_round = round_of(k);
    }
    return info_.emplace(k, std::move(c)).first->second;
  }

  void toggle(CellKey k) { ensure_info(find(k)).parity ^= 1; }

  void unite(CellKey a, CellKey b) {
    CellKey ra = find(a), rb = find(b);
    if (ra == rb) return;
    Component& ia = ensure_info(ra);
    Component& ib = ensure_info(rb);
    // Markers must stay roots so their keys remain stable handles (the low
    // marker outranks the high one); among real roots, merge the smaller
    // member list into the larger.
    bool keep_a;
    if (is_marker(ra) && is_marker(rb))
      keep_a = ra > rb;  // kLowKey (-1) beats kHighKey (-2)
    else if (is_marker(ra) || is_marker(rb))
      keep_a = is_marker(ra);
    else
      keep_a = ia.cells.size() >= ib.cells.size();
    CellKey keep = keep_a ? ra : rb, drop = keep_a ? rb : ra;
    Component& ik = keep_a ? ia : ib;
    Component& id = keep_a ? ib : ia;
    ik.parity ^= id.parity;
    ik.has_low |= id.has_low;
    ik.has_high |= id.has_high;
    ik.min_row = std::min(ik.min_row, id.min_row);
    ik.max_row = std::max(ik.max_row, id.max_row);
    ik.min_round = std::min(ik.min_round, id.min_round);
    ik.max_round = std::max(ik.max_round, id.max_round);
    ik.cells.insert(ik.cells.end(), id.cells.begin(), id.cells.end());
    parent_[drop] = keep;
    info_.erase(drop);
  }

  const LatticeGeometry* geo_;
  CellType type_;
  std::int64_t cpl_;
  std::int64_t lo_, hi_;
  std::unordered_map<CellKey, CellKey> parent_;
  std::unordered_map<CellKey, Component> info_;
};

}  // namespace tcsim
