#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#ifdef TCSIM_DEBUG_FOLD
#include <cstdio>
#endif
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

#include "tcsim/decoder.hpp"

namespace tcsim {

// Parameters of one continuously running simulation chain. Logical checks
// happen every t_check noisy rounds; measurement records older than the
// retention horizon are folded into frozen parity accumulators and deleted,
// so memory stays bounded no matter how long the chain runs.
struct RunConfig {
  std::int64_t t_check = 16;  // noisy rounds between logical checks
  std::int64_t t_delete = 0;  // retention in rounds; 0 selects 5 * d
  bool adapt_t_check = true;  // rescale t_check toward ~1 failure / 4 blocks
  bool monitor_dual = false;  // also decode/track the dual lattice

  void validate() const {
    if (t_check < 1) throw std::invalid_argument("t_check must be >= 1");
    if (t_delete < 0) throw std::invalid_argument("t_delete must be >= 0");
  }
  // Retention actually applied: an explicit t_delete (or the 5d default) can
  // never undercut the span one block plus its capping rounds needs.
  std::int64_t effective_t_delete(int d, std::int64_t t_chk) const {
    std::int64_t v = t_delete > 0 ? t_delete : 5 * static_cast<std::int64_t>(d);
    return std::max(v, t_chk + 2);
  }

  // Depth of the trailing slab over which loss percolation is assessed. A
  // loss failure is a cluster of losses recorded within this many recent
  // rounds that bridges the lattice boundaries; older damage has been
  // measured out of the active slab and cannot destroy the qubit anymore.
  // (Retention below this horizon truncates the assessed slab.)
  static std::int64_t span_horizon(int d) {
    return 5 * static_cast<std::int64_t>(d);
  }
};

// Outcome of one check block.
struct BlockResult {
  std::int64_t rounds = 0;  // noisy rounds simulated in this block
  bool pauli_fail = false;  // a monitored logical parity changed
  bool loss_fail = false;   // a loss cluster newly connected the boundaries
};

// One continuously running, periodically checked simulation chain.
//
// Every block simulates t_check noisy rounds, snapshots the engine, runs two
// noiseless capping rounds so a window of cells becomes complete, and then,
// per monitored lattice, clusters the retained losses/flips, decodes, and
// compares the resulting logical parity against the previous check. The
// parity is tracked as
//
//   P_total = frozen_true ^ frozen_corr ^ P_true ^ P_corr
//
// where P_true is the boundary-crossing parity of the retained physical
// flips (a flip crosses when an odd number of the cells it toggles belongs
// to the low-boundary component), P_corr is the parity of decoder matches
// that terminate on the low boundary, and the frozen bits carry the same two
// quantities for records that have been folded away. After the check the
// snapshot is restored and the capped rounds are re-simulated noisily; the
// counter-based noise stream makes that replay exact.
//
// Loss failures are judged separately on the trailing span_horizon rounds:
// a failure is counted whenever the losses recorded in that slab newly
// bridge the lattice boundaries. Older losses have been measured out of the
// active slab, so a long-lived chain can fail, recover, and fail again.
//
// Folding: the retention horizon fixes a cut a safe distance behind the
// newest complete cells, and everything the dropped records contributed to
// the chain's future is captured exactly before they go. Component
// membership below the cut is final at fold time -- every record able to
// reach a cell more than two rounds under the cap already exists, and the
// capping records that get re-simulated noisily only ever gain structure --
// so the fold can (a) XOR into frozen_true the crossing parities of the
// flips being dropped, plus the dropped-round crossings of surviving flips,
// (b) XOR into frozen_corr the low-match bits of decoded events whose cells
// all lie under the cut, and (c) leave, for every component straddling the
// cut, a seed holding its kept cells, its boundary attachments, and the
// parity its dropped records contributed; seeds are replayed into every
// later window, so superstabilizers and toggles older than the window
// persist exactly. The one remaining approximation is the windowed
// re-match: a surviving event whose match partner folds away is re-matched
// within the window at the next check.
class WindowedRun {
 public:
  WindowedRun(const LatticeGeometry& geo, const ErrorModelParams& params,
              std::uint64_t seed, std::uint64_t trial, const RunConfig& cfg)
      : WindowedRun(geo, params, seed, trial, cfg, nullptr, nullptr) {}

  // Shared-decoder variant: `primal` (and `dual` when monitoring it) must
  // outlive this object. Passing nullptr builds an owned instance.
  WindowedRun(const LatticeGeometry& geo, const ErrorModelParams& params,
              std::uint64_t seed, std::uint64_t trial, const RunConfig& cfg,
              const Decoder* primal, const Decoder* dual)
      : geo_(&geo), cfg_(cfg), eng_(geo, params, seed, trial) {
    cfg_.validate();
    t_check_ = cfg_.t_check;
    if (!primal) {
      owned_primal_ =
          std::make_unique<Decoder>(geo, params, CellType::Primal);
      primal = owned_primal_.get();
    }
    mon_.push_back(Monitor{CellType::Primal, primal});
    if (cfg_.monitor_dual) {
      if (!dual) {
        owned_dual_ = std::make_unique<Decoder>(geo, params, CellType::Dual);
        dual = owned_dual_.get();
      }
      mon_.push_back(Monitor{CellType::Dual, dual});
    }
  }

  std::int64_t t_check() const { return t_check_; }
  std::int64_t window_lo(CellType type) const {
    for (const Monitor& m : mon_)
      if (m.type == type) return m.r_lo;
    throw std::invalid_argument("lattice type is not monitored");
  }
  const SimEngine& engine() const { return eng_; }
  // Mutable engine access, e.g. to inject deterministic faults between
  // blocks; the injected generations must not have been simulated yet.
  SimEngine& engine() { return eng_; }

  // Runs one check block and reports what it saw.
  BlockResult step() {
    BlockResult out;
    const std::int64_t t_chk = t_check_;
    for (std::int64_t i = 0; i < t_chk; ++i) eng_.advance_round(true);
    out.rounds = t_chk;
    const std::int64_t cap_at = eng_.next_round();
    SimEngine::Snapshot snap = eng_.snapshot();
    eng_.advance_round(false);
    eng_.advance_round(false);

    const std::int64_t t_del = cfg_.effective_t_delete(geo_->d(), t_chk);
    std::int64_t keep_lo = std::numeric_limits<std::int64_t>::max();
    for (Monitor& m : mon_) {
      check_monitor(m, cap_at, t_del, out);
      keep_lo = std::min(keep_lo, m.r_lo);
    }
    eng_.restore(snap);
    eng_.drop_records_before(keep_lo);

    if (cfg_.adapt_t_check) {
      ++adapt_blocks_;
      if (out.pauli_fail || out.loss_fail) ++adapt_fails_;
      if (adapt_blocks_ == 16) {
        const double rate = adapt_fails_ / 16.0;
        if (rate < 0.1)
          t_check_ = std::min<std::int64_t>(t_check_ * 2, 10000);
        else if (rate > 0.5)
          t_check_ = std::max<std::int64_t>(t_check_ / 2, 1);
        adapt_blocks_ = adapt_fails_ = 0;
      }
    }
    return out;
  }

 private:
  // Superstabilizer state carried across folds: window cells that dropped
  // records had merged (with each other and/or a boundary) or toggled.
  struct Seed {
    std::vector<CellKey> cells;  // sorted, all at rounds >= the fold cut
    bool has_low = false, has_high = false;
    int parity = 0;  // net toggle the dropped records contributed
  };

  struct Monitor {
    CellType type;
    const Decoder* dec;
    bool frozen_true = false;   // crossing parity of folded physical flips
    bool frozen_corr = false;   // low-match parity of folded decoded events
    bool p_prev = false;        // P_total at the previous check
    bool spanning_prev = false;
    std::int64_t r_lo = 0;      // first retained cell round
    std::vector<Seed> seeds;
  };

  // Crossing parity of one measured flip: 1 when an odd number of the cells
  // it toggles lies in the low component. Real-cell toggles count only below
  // round `below`; boundary-marker toggles count only with `with_virtual`.
  static bool crossing(LossClusters& lc, const LatticeGeometry& geo, int sid,
                       std::int64_t gen, CellKey low_root, std::int64_t below,
                       bool with_virtual) {
    QubitSite s = geo.site(sid);
    if (face_type(s.cls) != lc.type()) return false;
    int par = 0;
    for (const CellRef& ref : geo.own_cells(s)) {
      auto k = lc.ref_key(ref, gen);
      if (!k) continue;
      if (LossClusters::is_marker(*k)) {
        if (with_virtual && lc.find(*k) == low_root) par ^= 1;
      } else if (lc.round_of(*k) < below && lc.find(*k) == low_root) {
        par ^= 1;
      }
    }
    return par & 1;
  }

  void check_monitor(Monitor& m, std::int64_t cap_at, std::int64_t t_del,
                     BlockResult& out) {
    constexpr std::int64_t kNoBound =
        std::numeric_limits<std::int64_t>::max();
    const std::int64_t hi =
        m.type == CellType::Primal ? cap_at - 1 : cap_at;
    LossClusters lc(*geo_, m.type, m.r_lo, hi);
    for (const Seed& s : m.seeds) {
      bool have = false;
      CellKey prev = 0;
      if (s.has_low) {
        prev = LossClusters::kLowKey;
        have = true;
      }
      if (s.has_high) {
        if (have) lc.merge(prev, LossClusters::kHighKey);
        prev = LossClusters::kHighKey;
        have = true;
      }
      for (CellKey k : s.cells) {
        if (have) lc.merge(prev, k);
        prev = k;
        have = true;
      }
      if (s.parity) lc.toggle_cell(s.cells.front());
    }
    // Loss percolation is judged on a separate, seedless clustering over the
    // trailing slab only: in `lc` a boundary bridge would outlive its own
    // cells (seeds re-merge the markers as long as any boundary-attached cell
    // survives), while physically damage that has been measured out of the
    // active slab cannot destroy the qubit, and new bridges must count again.
    const std::int64_t span_lo =
        std::max(m.r_lo, cap_at + 1 - RunConfig::span_horizon(geo_->d()));
    LossClusters span_lc(*geo_, m.type, span_lo, hi);

    // Records with gen < r_lo can stay alive for the other monitor; this
    // monitor already folded them (frozen bits and seeds carry everything
    // they contributed), so re-feeding them would double-count.
    for (const auto& rec : eng_.records()) {
      if (rec.gen < m.r_lo) continue;
      for (int sid : rec.losses) {
        lc.add_loss(sid, rec.gen);
        if (rec.gen >= span_lo) span_lc.add_loss(sid, rec.gen);
      }
    }
    for (const auto& rec : eng_.records()) {
      if (rec.gen < m.r_lo) continue;
      for (int sid : rec.flips) lc.add_flip(sid, rec.gen);
    }

    DecodeResult res = m.dec->decode(lc);
    const bool spanning_now = span_lc.spanning();
    const CellKey low_root = lc.find(LossClusters::kLowKey);

    bool p_true = false;
    for (const auto& rec : eng_.records()) {
      if (rec.gen < m.r_lo) continue;
      for (int sid : rec.flips)
        p_true ^= crossing(lc, *geo_, sid, rec.gen, low_root, kNoBound, true);
    }
    const bool p_corr = res.parity_low() != 0;
    const bool p_total = m.frozen_true ^ m.frozen_corr ^ p_true ^ p_corr;
#ifdef TCSIM_DEBUG_FOLD
    std::fprintf(stderr,
                 "[win %c] cap=%lld r_lo=%lld ft=%d fc=%d pt=%d pc=%d tot=%d "
                 "ev=%zu seeds=%zu\n",
                 m.type == CellType::Primal ? 'P' : 'D',
                 static_cast<long long>(cap_at),
                 static_cast<long long>(m.r_lo), int(m.frozen_true),
                 int(m.frozen_corr), int(p_true), int(p_corr), int(p_total),
                 res.event_roots.size(), m.seeds.size());
#endif
    out.pauli_fail |= p_total != m.p_prev;
    m.p_prev = p_total;
    out.loss_fail |= spanning_now && !m.spanning_prev;
    m.spanning_prev = spanning_now;

    const std::int64_t cut = cap_at + 1 - t_del;
    if (cut <= m.r_lo) return;
    // Freeze each flip's crossing exactly once: a dropped flip contributes
    // its full crossing (it will never be seen again; its real toggles all
    // clamp away in later windows), a kept flip only the part its toggles
    // below the cut contribute now but clamp away later. Membership of every
    // cell below the cut is final, so these bits are final.
    for (const auto& rec : eng_.records()) {
      if (rec.gen < m.r_lo) continue;
      const bool dropped = rec.gen < cut;
      for (int sid : rec.flips) {
        const bool x =
            dropped
                ? crossing(lc, *geo_, sid, rec.gen, low_root, kNoBound, true)
                : crossing(lc, *geo_, sid, rec.gen, low_root, cut, false);
        m.frozen_true = m.frozen_true ^ x;
      }
    }
    std::vector<std::int64_t> ev_max(res.event_roots.size(), -1);
    for (std::size_t i = 0; i < res.event_roots.size(); ++i)
      for (CellKey k : lc.members(res.event_roots[i]))
        ev_max[i] = std::max(ev_max[i], lc.round_of(k));
    for (std::size_t i = 0; i < res.event_roots.size(); ++i) {
      if (ev_max[i] >= cut) continue;  // event survives the fold
      if (res.mate[i] == -1) {
        m.frozen_corr = !m.frozen_corr;
      } else if (res.mate[i] >= 0 &&
                 ev_max[static_cast<std::size_t>(res.mate[i])] >= cut) {
        // The pair straddles the cut: commit the match. The dropped side
        // freezes (a pair chain never crosses the low boundary) and the
        // survivor is neutralized so later windows do not re-match it.
        lc.toggle_cell(
            res.event_roots[static_cast<std::size_t>(res.mate[i])]);
      }
    }
    // Parity that retained records will re-contribute to each kept cell
    // when later windows are rebuilt.
    std::unordered_map<CellKey, int> refed;
    for (const auto& rec : eng_.records()) {
      if (rec.gen < cut) continue;
      for (int sid : rec.flips) {
        QubitSite s = geo_->site(sid);
        if (face_type(s.cls) != m.type) continue;
        for (const CellRef& ref : geo_->own_cells(s)) {
          auto k = lc.ref_key(ref, rec.gen);
          if (k && !LossClusters::is_marker(*k) && lc.round_of(*k) >= cut)
            refed[*k] ^= 1;
        }
      }
    }
    // A component straddling the cut leaves its kept part, attachments, and
    // the parity not re-derivable from retained records as a seed.
    std::vector<Seed> seeds;
    for (const auto& comp : lc.components()) {
      Seed s;
      for (CellKey k : comp.cells)
        if (lc.round_of(k) >= cut) s.cells.push_back(k);
      if (s.cells.empty()) continue;
      s.has_low = comp.has_low;
      s.has_high = comp.has_high;
      int par = comp.parity;
      for (CellKey k : s.cells) {
        auto it = refed.find(k);
        if (it != refed.end()) par ^= it->second;
      }
      s.parity = par & 1;
      if (s.parity || s.has_low || s.has_high || s.cells.size() >= 2)
        seeds.push_back(std::move(s));
    }
    m.seeds = std::move(seeds);
    m.r_lo = cut;
  }

  const LatticeGeometry* geo_;
  RunConfig cfg_;
  SimEngine eng_;
  std::unique_ptr<Decoder> owned_primal_, owned_dual_;
  std::vector<Monitor> mon_;
  std::int64_t t_check_ = 1;
  int adapt_blocks_ = 0, adapt_fails_ = 0;
};

// Stopping rules and worker count for a failure-rate estimate.
struct EstimateConfig {
  std::int64_t target_failures = 100;
  std::int64_t max_blocks = std::numeric_limits<std::int64_t>::max();
  double max_seconds = 0;  // 0: no time limit
  int workers = 1;

  void validate() const {
    if (target_failures < 1)
      throw std::invalid_argument("target_failures must be >= 1");
    if (max_blocks < 1) throw std::invalid_argument("max_blocks must be >= 1");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  }
};

struct EstimateResult {
  std::int64_t blocks = 0;
  std::int64_t rounds = 0;          // total noisy rounds across workers
  std::int64_t failures = 0;        // blocks with any failure
  std::int64_t pauli_failures = 0;  // blocks with a parity failure
  std::int64_t loss_failures = 0;   // blocks with a new spanning cluster
  std::int64_t trials = 0;          // independent chains consumed
  bool timed_out = false;
  double wall_seconds = 0;  // measured run time; excluded from output files
};

// Runs `workers` chains drawn from a shared sequence of independent trials
// until the pooled failure count reaches the target, the block budget is
// exhausted, or the deadline passes. A parity failure leaves its chain
// running (the fabric survives and the parity keeps evolving), but a loss
// failure destroys the simulated qubit -- spanning damage is an absorbing
// state -- so the chain is retired and the worker starts the next trial
// fresh. With one worker the result is a deterministic function of
// (seed, parameters, config).
inline EstimateResult estimate(const LatticeGeometry& geo,
                               const ErrorModelParams& params,
                               std::uint64_t seed, const RunConfig& run,
                               const EstimateConfig& ec) {
  run.validate();
  ec.validate();
  Decoder primal(geo, params, CellType::Primal);
  std::optional<Decoder> dual;
  if (run.monitor_dual) dual.emplace(geo, params, CellType::Dual);

  std::atomic<std::int64_t> blocks{0}, rounds{0}, failures{0}, pauli{0},
      loss{0};
  std::atomic<std::uint64_t> next_trial{0};
  std::atomic<bool> stop{false};
  const auto start = std::chrono::steady_clock::now();
  auto expired = [&]() {
    if (ec.max_seconds <= 0) return false;
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - start;
    return dt.count() >= ec.max_seconds;
  };

  auto work = [&]() {
    std::optional<WindowedRun> chain;
    while (!stop.load(std::memory_order_relaxed)) {
      if (!chain)
        chain.emplace(geo, params, seed, next_trial.fetch_add(1), run,
                      &primal, dual ? &*dual : nullptr);
      BlockResult b = chain->step();
      rounds.fetch_add(b.rounds, std::memory_order_relaxed);
      const std::int64_t nb = blocks.fetch_add(1) + 1;
      if (b.pauli_fail) pauli.fetch_add(1, std::memory_order_relaxed);
      if (b.loss_fail) {
        loss.fetch_add(1, std::memory_order_relaxed);
        chain.reset();  // the qubit is destroyed; next block, next trial
      }
      std::int64_t nf = failures.load(std::memory_order_relaxed);
      if (b.pauli_fail || b.loss_fail) nf = failures.fetch_add(1) + 1;
      if (nf >= ec.target_failures || nb >= ec.max_blocks || expired())
        stop.store(true, std::memory_order_relaxed);
    }
  };

  if (ec.workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(ec.workers);
    for (int w = 0; w < ec.workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  EstimateResult res;
  res.blocks = blocks.load();
  res.rounds = rounds.load();
  res.failures = failures.load();
  res.pauli_failures = pauli.load();
  res.loss_failures = loss.load();
  res.trials = static_cast<std::int64_t>(next_trial.load());
  res.timed_out = res.failures < ec.target_failures &&
                  res.blocks < ec.max_blocks && ec.max_seconds > 0;
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return res;
}

}  // namespace tcsim
