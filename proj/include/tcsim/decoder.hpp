#pragma once

// Matching decoder for one cell type. Three layers:
//
// 1. A round-invariant weight template enumerating every single-fault
//    mechanism of the error model (preparation, interaction, waiting,
//    readout, and the survivor Pauli of a skipped interaction), propagated
//    symbolically through the remaining gates of the touched qubits. Each
//    mechanism flips at most two checks of a given type; aggregating
//    mechanism probabilities per flipped pair yields the edges of a
//    matching graph, with boundary edges where one toggle lands beyond the
//    lattice.
//
// 2. An implicit contracted graph: lost-qubit components (superstabilizers)
//    collapse template vertices, and parallel edges between two components
//    combine as q = 1 - prod(1 - q_i), w = -log q.
//
// 3. Local Dijkstra searches from every detection event with early
//    termination (stop once past twice the nearest-boundary distance),
//    candidate-edge pruning (keep (i, j) only when dist < D_i + D_j),
//    decomposition into clusters of surviving edges, and exact
//    minimum-weight perfect matching per cluster with one boundary copy per
//    event.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tcsim/blossom.hpp"
#include "tcsim/errmodel.hpp"
#include "tcsim/lattice.hpp"
#include "tcsim/syndrome.hpp"

namespace tcsim {

// Fixed-point edge weight: w = round(1e9 * -log q). Probability-1 edges get
// weight zero; larger probabilities are invalid.
inline std::int64_t weight_from_probability(double q) {
  if (!(q > 0.0) || q > 1.0)
    throw std::domain_error("edge probability out of range");
  double w = -std::log(q) * 1e9;
  return w <= 0.0 ? 0 : std::llround(w);
}

// Probability that at least one of several independent faults fires,
// combined in a canonical order so every caller gets the identical double.
inline double combined_probability(std::vector<double>& qs) {
  std::sort(qs.begin(), qs.end());
  double om = 1.0;
  for (double q : qs) om *= 1.0 - q;
  return 1.0 - om;
}

// One directed arc of the weight template: cell (id, r) connects to cell
// (nid, r + dr) with total mechanism probability q.
struct TemplateArc {
  int nid;
  int dr;
  double q;
};

// Arc from a cell to a matching boundary (side -1 = low, +1 = high).
struct BoundaryArc {
  int side;
  double q;
};

// Canonical aggregated edge, for dumps and tests. id_b == -1 marks a
// boundary edge (dr is 0 and side names the boundary).
struct TemplateEdge {
  int id_a;
  int id_b;
  int dr;
  int side;
  double q;
  std::int64_t weight;
};

struct WeightTemplate {
  CellType type{};
  std::vector<std::vector<TemplateArc>> arcs;    // indexed by cell id
  std::vector<std::vector<BoundaryArc>> barcs;   // indexed by cell id
  std::vector<TemplateEdge> edges;               // canonical list
};

inline WeightTemplate build_weight_template(const LatticeGeometry& geo,
                                            const ErrorModelParams& params,
                                            CellType type) {
  params.validate();
  // Any generation deep enough in the bulk that every relative round and
  // partner generation the mechanisms touch is non-negative.
  const std::int64_t kBase = 8;

  using Flip = std::pair<int, std::int64_t>;  // (site, generation)
  using Picks = std::vector<std::pair<std::vector<Flip>, double>>;

  // Accumulators keyed by canonical edge. Picks within one physical noise
  // channel are mutually exclusive and add; distinct channels are
  // independent and combine as 1 - prod(1 - p).
  std::map<std::tuple<int, int, int>, double> pair_om;  // (id_a, id_b, dr)
  std::map<std::pair<int, int>, double> bnd_om;         // (id, side)

  auto channel = [&](const Picks& picks) {
    std::map<std::tuple<int, int, int>, double> local_pair;
    std::map<std::pair<int, int>, double> local_bnd;
    for (const auto& [flips, p] : picks) {
      if (p <= 0.0) continue;
      std::map<std::pair<int, std::int64_t>, int> par;  // (cell id, round)
      int low = 0, high = 0;
      for (const auto& [sid, gen] : flips) {
        QubitSite s = geo.site(sid);
        if (face_type(s.cls) != type) continue;
        for (const CellRef& ref : geo.own_cells(s)) {
          if (ref.real())
            par[{ref.id, gen + ref.dgen}] ^= 1;
          else if (ref.side < 0)
            low ^= 1;
          else
            high ^= 1;
        }
      }
      std::vector<std::pair<int, std::int64_t>> cells;
      for (const auto& [c, v] : par)
        if (v) cells.push_back(c);
      if (cells.size() > 2)
        throw std::logic_error("a single fault toggled more than two checks");
      if (cells.size() == 2) {
        auto [ia, ra] = cells[0];
        auto [ib, rb] = cells[1];
        int dr = static_cast<int>(rb - ra);
        if (ib < ia || (ib == ia && dr < 0)) {
          std::swap(ia, ib);
          dr = -dr;
        }
        local_pair[{ia, ib, dr}] += p;
      } else if (cells.size() == 1) {
        if (((low ^ high) & 1) == 0)
          throw std::logic_error("unpaired check without a boundary toggle");
        local_bnd[{cells[0].first, (low & 1) ? -1 : +1}] += p;
      }
      // An empty toggle set is invisible to this template.
    }
    for (const auto& [k, p] : local_pair)
      pair_om.try_emplace(k, 1.0).first->second *= 1.0 - std::min(p, 1.0);
    for (const auto& [k, p] : local_bnd)
      bnd_om.try_emplace(k, 1.0).first->second *= 1.0 - std::min(p, 1.0);
  };

  // Flips produced by inserting a Pauli with the given X/Z components on a
  // site at `phase` (0 = right after preparation, j = right after its j-th
  // chronological interaction slot). The Z component flips the site's own
  // readout; the X component deposits a Z on the partner of every later
  // interaction.
  auto deposits = [&](int sid, std::int64_t gen, int phase, bool with_x,
                      bool with_z) {
    std::vector<Flip> flips;
    if (with_z) flips.push_back({sid, gen});
    if (with_x) {
      QubitSite s = geo.site(sid);
      for (int j = phase; j < 4; ++j) {
        auto p = geo.slot_partner(s, j);
        if (!p) continue;
        const SlotSpec& sp = slot_tables()[static_cast<int>(s.cls)][j];
        flips.push_back({*p, gen + sp.dgen});
      }
    }
    return flips;
  };

  const double pc = params.p_comp;
  for (int sid = 0; sid < geo.num_sites(); ++sid) {
    QubitSite s = geo.site(sid);
    // Preparation: an X right after |+> is absorbed by the state, so only
    // the two picks with a Z component leave a mark, and they act as a
    // plain Z.
    channel({{deposits(sid, kBase, 0, false, true), pc / 2}});
    // Readout: only the Z component of a Pauli right before an X-basis
    // measurement flips the outcome.
    channel({{{{sid, kBase}}, pc / 2}});

    for (int j = 0; j < 4; ++j) {
      auto partner = geo.slot_partner(s, j);
      if (!partner) {
        // Waiting step at a lattice edge: single-qubit depolarizing.
        channel({{deposits(sid, kBase, j + 1, true, false), pc / 4},
                 {deposits(sid, kBase, j + 1, true, true), pc / 4},
                 {deposits(sid, kBase, j + 1, false, true), pc / 4}});
        continue;
      }
      const SlotSpec& sp = slot_tables()[static_cast<int>(s.cls)][j];
      const int jb = geo.back_slot(sid, j);
      // Skipped interaction: the survivor picks up a uniformly random Pauli
      // with probability p_lint. The partner had one loss opportunity per
      // elapsed slot of its own generation (preparation plus its earlier
      // interactions), i.e. jb + 1 draws.
      const double pl =
          (params.p_lint / 4) *
          (1.0 - std::pow(1.0 - params.p_loss, static_cast<double>(jb + 1)));
      if (pl > 0.0)
        channel({{deposits(sid, kBase, j + 1, true, false), pl},
                 {deposits(sid, kBase, j + 1, true, true), pl},
                 {deposits(sid, kBase, j + 1, false, true), pl}});
      // Two-qubit depolarizing after the gate, accounted once by the owner.
      if (sp.owner && pc > 0.0) {
        const std::int64_t pgen = kBase + sp.dgen;
        Picks picks;
        for (int v = 1; v < 16; ++v) {
          const int ca = v & 3, cb = v >> 2;
          auto fl = deposits(sid, kBase, j + 1, ca == 1 || ca == 2,
                             ca == 2 || ca == 3);
          auto f2 = deposits(*partner, pgen, jb + 1, cb == 1 || cb == 2,
                             cb == 2 || cb == 3);
          fl.insert(fl.end(), f2.begin(), f2.end());
          picks.push_back({std::move(fl), pc / 16});
        }
        channel(picks);
      }
    }
  }

  WeightTemplate tpl;
  tpl.type = type;
  const int ncells = geo.cells_per_layer(type);
  tpl.arcs.assign(ncells, {});
  tpl.barcs.assign(ncells, {});
  for (const auto& [key, om] : pair_om) {
    auto [ia, ib, dr] = key;
    const double q = 1.0 - om;
    if (q <= 0.0) continue;
    tpl.edges.push_back({ia, ib, dr, 0, q, weight_from_probability(q)});
    tpl.arcs[ia].push_back({ib, dr, q});
    tpl.arcs[ib].push_back({ia, -dr, q});
  }
  for (const auto& [key, om] : bnd_om) {
    auto [id, side] = key;
    const double q = 1.0 - om;
    if (q <= 0.0) continue;
    tpl.edges.push_back({id, -1, 0, side, q, weight_from_probability(q)});
    tpl.barcs[id].push_back({side, q});
  }
  auto arc_order = [](const TemplateArc& a, const TemplateArc& b) {
    return std::tie(a.nid, a.dr) < std::tie(b.nid, b.dr);
  };
  for (auto& v : tpl.arcs) std::sort(v.begin(), v.end(), arc_order);
  for (auto& v : tpl.barcs)
    std::sort(v.begin(), v.end(),
              [](const BoundaryArc& a, const BoundaryArc& b) {
                return a.side < b.side;
              });
  return tpl;
}

// Outcome of decoding one window. Events follow the order of
// LossClusters::components() restricted to detection events.
struct DecodeResult {
  std::vector<CellKey> event_roots;         // component root per event
  std::vector<int> mate;                    // event index, or -1 low / -2 high
  std::vector<std::int64_t> boundary_dist;  // nearest-boundary distance D_i
  std::vector<int> boundary_side;           // -1 low / +1 high
  std::map<std::pair<int, int>, std::int64_t> pair_dist;  // kept edges, i < j
  std::int64_t total_weight = 0;  // weight of the chosen matching
  int low_matches = 0;            // events matched to the low boundary
  int parity_low() const { return low_matches & 1; }
};

class Decoder {
 public:
  Decoder(const LatticeGeometry& geo, const ErrorModelParams& params,
          CellType type)
      : geo_(&geo), type_(type), tpl_(build_weight_template(geo, params, type)) {}

  const WeightTemplate& weight_template() const { return tpl_; }
  CellType type() const { return type_; }

  DecodeResult decode(LossClusters& lc) const {
    if (lc.type() != type_)
      throw std::invalid_argument("cluster/decoder type mismatch");
    DecodeResult out;
    for (const auto& c : lc.components())
      if (c.is_event()) out.event_roots.push_back(lc.find(c.cells.front()));
    const int n = static_cast<int>(out.event_roots.size());
    out.mate.assign(n, -3);
    out.boundary_dist.assign(n, -1);
    out.boundary_side.assign(n, 0);
    if (n == 0) return out;
    if (tpl_.edges.empty())
      throw std::runtime_error("detection events with an empty weight graph");

    std::unordered_map<CellKey, int> evidx;
    for (int i = 0; i < n; ++i) evidx[out.event_roots[i]] = i;

    std::map<std::pair<int, int>, std::int64_t> dist_ij;
    for (int i = 0; i < n; ++i) search(lc, i, evidx, out, dist_ij);

    // Keep a candidate edge only when it beats matching both of its ends to
    // their boundaries; equality ties go to the boundary.
    for (const auto& [ij, dv] : dist_ij)
      if (dv < out.boundary_dist[ij.first] + out.boundary_dist[ij.second])
        out.pair_dist.insert({ij, dv});

    // Clusters of events connected by surviving edges.
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    for (const auto& [ij, dv] : out.pair_dist) {
      (void)dv;
      int a = find(ij.first), b = find(ij.second);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::map<int, std::vector<int>> clusters;
    for (int i = 0; i < n; ++i) clusters[find(i)].push_back(i);

    for (const auto& [root, ev] : clusters) {
      (void)root;
      const int m = static_cast<int>(ev.size());
      std::vector<std::vector<std::int64_t>> w(
          2 * m, std::vector<std::int64_t>(2 * m, -1));
      for (int a = 0; a < m; ++a) {
        w[a][m + a] = w[m + a][a] = out.boundary_dist[ev[a]];
        for (int b = a + 1; b < m; ++b) {
          auto it = out.pair_dist.find({ev[a], ev[b]});
          if (it != out.pair_dist.end()) w[a][b] = w[b][a] = it->second;
          w[m + a][m + b] = w[m + b][m + a] = 0;
        }
      }
      MatchResult res = min_weight_perfect_matching(w);
      out.total_weight += res.weight;
      for (int a = 0; a < m; ++a) {
        const int mt = res.mate[a];
        if (mt < m) {
          out.mate[ev[a]] = ev[mt];
        } else {
          out.mate[ev[a]] = out.boundary_side[ev[a]] < 0 ? -1 : -2;
          if (out.boundary_side[ev[a]] < 0) ++out.low_matches;
        }
      }
    }
    return out;
  }

  // Explicit contracted graph over the full window (component roots plus
  // boundary markers, parallel edges combined). For cross-checking the
  // on-the-fly expansion and for dumps; quadratic in the window size.
  std::map<CellKey, std::vector<std::pair<CellKey, std::int64_t>>> materialize(
      LossClusters& lc) const {
    std::map<std::pair<CellKey, CellKey>, std::vector<double>> qs;
    auto add = [&](CellKey a, CellKey b, double q) {
      if (a == b) return;
      if (a > b) std::swap(a, b);
      qs[{a, b}].push_back(q);
    };
    for (std::int64_t r = lc.round_lo(); r <= lc.round_hi(); ++r) {
      for (int id = 0; id < geo_->cells_per_layer(type_); ++id) {
        const CellKey k = lc.cell_key(r, id);
        const CellKey root = lc.find(k);
        for (const TemplateArc& a : tpl_.arcs[id]) {
          const std::int64_t nr = r + a.dr;
          if (nr < lc.round_lo() || nr > lc.round_hi()) continue;
          const CellKey nk = lc.cell_key(nr, a.nid);
          if (nk < k) continue;  // count each undirected arc once
          add(root, lc.find(nk), a.q);
        }
        for (const BoundaryArc& b : tpl_.barcs[id])
          add(root, lc.find(LossClusters::marker(b.side)), b.q);
      }
    }
    std::map<CellKey, std::vector<std::pair<CellKey, std::int64_t>>> adj;
    for (auto& [ab, v] : qs) {
      const std::int64_t w = weight_from_probability(combined_probability(v));
      adj[ab.first].push_back({ab.second, w});
      adj[ab.second].push_back({ab.first, w});
    }
    return adj;
  }

 private:
  // Combined-weight neighbors of a component root, built on the fly.
  template <typename F>
  void expand(LossClusters& lc, CellKey u, F&& visit) const {
    std::unordered_map<CellKey, std::vector<double>> acc;
    for (CellKey k : lc.members(u)) {
      const std::int64_t r = lc.round_of(k);
      const int id = lc.id_of(k);
      for (const TemplateArc& a : tpl_.arcs[id]) {
        const std::int64_t nr = r + a.dr;
        if (nr < lc.round_lo() || nr > lc.round_hi()) continue;
        const CellKey nroot = lc.find(lc.cell_key(nr, a.nid));
        if (nroot == u) continue;
        acc[nroot].push_back(a.q);
      }
      for (const BoundaryArc& b : tpl_.barcs[id]) {
        const CellKey nroot = lc.find(LossClusters::marker(b.side));
        if (nroot == u) continue;
        acc[nroot].push_back(b.q);
      }
    }
    for (auto& [v, qs] : acc)
      visit(v, weight_from_probability(combined_probability(qs)));
  }

  // Dijkstra from one event with early termination. Records the nearest
  // boundary (ties resolved toward the low side) and the distance to every
  // event settled before passing twice that distance.
  void search(LossClusters& lc, int self,
              const std::unordered_map<CellKey, int>& evidx, DecodeResult& out,
              std::map<std::pair<int, int>, std::int64_t>& dist_ij) const {
    auto ord = [](CellKey k) {
      if (k == LossClusters::kLowKey)
        return std::numeric_limits<CellKey>::min();
      if (k == LossClusters::kHighKey)
        return std::numeric_limits<CellKey>::min() + 1;
      return k;
    };
    using Item = std::tuple<std::int64_t, CellKey, CellKey>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    std::unordered_map<CellKey, std::int64_t> best;
    std::unordered_set<CellKey> done;
    const CellKey src = out.event_roots[self];
    best[src] = 0;
    pq.push({0, ord(src), src});
    std::int64_t bound = -1;
    while (!pq.empty()) {
      auto [dcur, o, u] = pq.top();
      (void)o;
      pq.pop();
      if (done.count(u)) continue;
      if (bound >= 0 && dcur > bound) break;
      done.insert(u);
      if (LossClusters::is_marker(u)) {
        // Boundaries absorb paths: record the first one, never expand.
        if (out.boundary_dist[self] < 0) {
          out.boundary_dist[self] = dcur;
          out.boundary_side[self] = (u == LossClusters::kLowKey) ? -1 : +1;
          bound = 2 * dcur;
        }
        continue;
      }
      auto it = evidx.find(u);
      if (it != evidx.end() && it->second != self) {
        const int a = std::min(self, it->second);
        const int b = std::max(self, it->second);
        dist_ij.try_emplace({a, b}, dcur);
      }
      expand(lc, u, [&](CellKey v, std::int64_t w) {
        if (done.count(v)) return;
        const std::int64_t nd = dcur + w;
        auto [bit, inserted] = best.try_emplace(v, nd);
        if (!inserted) {
          if (bit->second <= nd) return;
          bit->second = nd;
        }
        pq.push({nd, ord(v), v});
      });
    }
    if (out.boundary_dist[self] < 0)
      throw std::runtime_error("no boundary reachable from an event");
  }

  const LatticeGeometry* geo_;
  CellType type_;
  WeightTemplate tpl_;
};

}  // namespace tcsim
