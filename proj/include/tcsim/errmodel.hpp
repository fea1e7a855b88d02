#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tcsim/lattice.hpp"
#include "tcsim/rng.hpp"

namespace tcsim {

// Physical noise parameters. `p_comp` is the computational error rate: each
// elementary operation (initialization, interaction, idle slot, measurement)
// is followed by a uniformly random Pauli on the touched qubits with this
// probability. `p_loss` is the per-slot loss probability (six slots per
// qubit generation). `p_lint` is the probability that a qubit whose gate
// partner has been lost acquires a uniformly random single-qubit Pauli in
// place of the skipped interaction.
struct ErrorModelParams {
  double p_comp = 0.0;
  double p_loss = 0.0;
  double p_lint = 0.0;

  void validate() const {
    for (double p : {p_comp, p_loss, p_lint})
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("error probabilities must be in [0, 1]");
  }
};

// Live state of the qubit currently hosted at a lattice site.
struct SiteState {
  std::int64_t gen = -1;      // generation, -1 before first initialization
  std::uint64_t rng_key = 0;  // per-(site, generation) RNG key
  std::uint8_t fx = 0;        // Pauli frame: X component
  std::uint8_t fz = 0;        // Pauli frame: Z component
  bool lost = false;
};

// Measurement results of one qubit generation (all sites measure generation
// g during round g + 1). Site ids in both vectors are strictly increasing.
struct RoundRecord {
  std::int64_t gen = -1;
  std::vector<std::int32_t> flips;   // X-measurement outcome was flipped
  std::vector<std::int32_t> losses;  // qubit was lost; no outcome exists
};

// Discrete-event simulator of the measurement-based cluster protocol. Each
// round has six steps: early sites measure/initialize at step 0, late sites
// at step 3, and every site runs its four interaction slots at its class's
// fixed steps. Noise is drawn from a counter-based generator keyed by
// (seed, trial, generation, site, draw), so a given physical event draws the
// same randomness no matter how the surrounding rounds are replayed; this is
// what makes snapshot/rollback windows exactly consistent with a straight
// run.
class SimEngine {
 public:
  SimEngine(const LatticeGeometry& geo, const ErrorModelParams& params,
            std::uint64_t seed, std::uint64_t trial)
      : geo_(&geo), params_(params), stream_(seed, trial) {
    params_.validate();
    st_.resize(geo.num_sites());
    plan0_ = make_plan(geo.schedule_round(0));
    plan1_ = make_plan(geo.schedule_round(1));
  }

  const LatticeGeometry& geometry() const { return *geo_; }
  const ErrorModelParams& params() const { return params_; }
  std::int64_t next_round() const { return next_round_; }
  const std::deque<RoundRecord>& records() const { return records_; }
  const std::vector<SiteState>& states() const { return st_; }

  // Test hooks: queue a deterministic fault on qubit (site, gen). Phase 0
  // fires right after initialization, phases 1..4 right after the qubit's
  // chronological interaction slots, phase 5 right before measurement.
  void inject_pauli(int site, std::int64_t gen, int phase, char pauli) {
    check_phase(phase);
    std::uint8_t x = pauli == 'X' || pauli == 'Y';
    std::uint8_t z = pauli == 'Z' || pauli == 'Y';
    if (!x && !z) throw std::invalid_argument("injected Pauli must be X/Y/Z");
    injections_[key_of(site, gen)].push_back({phase, x, z, false});
  }
  void inject_loss(int site, std::int64_t gen, int phase) {
    check_phase(phase);
    injections_[key_of(site, gen)].push_back({phase, 0, 0, true});
  }

  // Runs one full round. With `noisy` false the gates, initializations and
  // measurements all execute but no randomness is drawn — used for the
  // temporary perfect rounds that finalize cells at a check point.
  void advance_round(bool noisy) {
    const std::int64_t r = next_round_;
    const Plan& plan = r == 0 ? plan0_ : plan1_;
    const std::int64_t shift = r == 0 ? 0 : r - 1;
    RoundRecord* rec = nullptr;
    if (r >= 1) {
      records_.push_back(RoundRecord{r - 1, {}, {}});
      rec = &records_.back();
    }
    std::size_t gi = 0;
    for (int k = 0; k < 6; ++k) {
      if (k == 0 || k == 3)
        for (int c = 0; c < kNumSiteClasses; ++c) {
          SiteClass cls = static_cast<SiteClass>(c);
          if (class_is_late(cls) != (k == 3)) continue;
          int off = geo_->class_offset(cls);
          int end = off + geo_->class_count(cls);
          for (int sid = off; sid < end; ++sid) {
            if (r >= 1) measure_site(sid, r - 1, noisy, rec);
            init_site(sid, r, noisy);
          }
        }
      for (; gi < plan.events.size() && plan.events[gi].step_k == k; ++gi)
        exec_event(plan.events[gi], shift, noisy);
    }
    ++next_round_;
  }

  // Drops retained measurement records older than `gen`.
  void drop_records_before(std::int64_t gen) {
    while (!records_.empty() && records_.front().gen < gen)
      records_.pop_front();
  }

  // Rollback point. Restoring rewinds the qubit states and removes the
  // measurement records of any rounds run after the snapshot was taken;
  // records dropped from the front in between stay dropped.
  struct Snapshot {
    std::vector<SiteState> st;
    std::int64_t next_round = 0;
  };
  Snapshot snapshot() const { return {st_, next_round_}; }
  void restore(const Snapshot& snap) {
    st_ = snap.st;
    next_round_ = snap.next_round;
    while (!records_.empty() && records_.back().gen >= snap.next_round - 1)
      records_.pop_back();
  }

 private:
  // One interaction slot instance; idle slots have site_b < 0. Generations
  // are stored relative to round 1 and shifted at execution time.
  struct Event {
    int step_k;
    int site_a;
    int slot_a;
    std::int64_t gen_a;
    int site_b;
    int slot_b;
    std::int64_t gen_b;
  };
  struct Plan {
    std::vector<Event> events;
  };
  struct Injection {
    int phase;
    std::uint8_t x, z;
    bool loss;
  };

  static Plan make_plan(const Schedule& sch) {
    Plan plan;
    for (const auto& g : sch.interactions)
      plan.events.push_back(
          {g.step_k, g.site_a, g.slot_a, g.gen_a, g.site_b, g.slot_b, g.gen_b});
    for (const auto& g : sch.idles)
      plan.events.push_back({g.step_k, g.site, g.slot, g.gen, -1, -1, -1});
    std::sort(plan.events.begin(), plan.events.end(),
              [](const Event& a, const Event& b) {
                return std::tie(a.step_k, a.site_a, a.slot_a) <
                       std::tie(b.step_k, b.site_a, b.slot_a);
              });
    return plan;
  }

  static void check_phase(int phase) {
    if (phase < 0 || phase > 5)
      throw std::invalid_argument("injection phase must be in 0..5");
  }
  static std::uint64_t key_of(int site, std::int64_t gen) {
    return static_cast<std::uint64_t>(gen) * 0x100000000ull +
           static_cast<std::uint32_t>(site);
  }

  void apply_injections(int site, std::int64_t gen, int phase) {
    auto it = injections_.find(key_of(site, gen));
    if (it == injections_.end()) return;
    SiteState& s = st_[site];
    for (const Injection& inj : it->second) {
      if (inj.phase != phase) continue;
      if (inj.loss) {
        s.lost = true;
      } else if (!s.lost) {
        s.fx ^= inj.x;
        s.fz ^= inj.z;
      }
    }
  }

  void apply_pick(SiteState& s, std::uint64_t c) {
    // 0 = I, 1 = X, 2 = Y, 3 = Z.
    s.fx ^= static_cast<std::uint8_t>(c == 1 || c == 2);
    s.fz ^= static_cast<std::uint8_t>(c == 2 || c == 3);
  }

  void measure_site(int sid, std::int64_t gen, bool noisy, RoundRecord* rec) {
    SiteState& s = st_[sid];
    if (s.gen != gen)
      throw std::logic_error("measurement found a stale generation");
    if (!injections_.empty()) apply_injections(sid, gen, 5);
    if (!s.lost && noisy) {
      // A Pauli just before an X-basis readout flips the outcome iff it has
      // a Z component.
      if (RngStream::u01(s.rng_key, 8 + 5) < params_.p_comp) {
        std::uint64_t c = RngStream::bits(s.rng_key, 16 + 5) & 3;
        s.fz ^= static_cast<std::uint8_t>(c == 2 || c == 3);
      }
      if (RngStream::u01(s.rng_key, 5) < params_.p_loss) s.lost = true;
    }
    if (s.lost)
      rec->losses.push_back(sid);
    else if (s.fz)
      rec->flips.push_back(sid);
  }

  void init_site(int sid, std::int64_t gen, bool noisy) {
    SiteState& s = st_[sid];
    s.gen = gen;
    s.rng_key = stream_.site_key(gen, static_cast<std::uint32_t>(sid));
    s.fx = 0;
    s.fz = 0;
    s.lost = false;
    if (noisy) {
      // A Pauli right after |+> preparation acts as I (for X) or Z (for Y
      // or Z), so only the Z component of the frame survives.
      if (RngStream::u01(s.rng_key, 8 + 0) < params_.p_comp) {
        std::uint64_t c = RngStream::bits(s.rng_key, 16 + 0) & 3;
        s.fz ^= static_cast<std::uint8_t>(c == 2 || c == 3);
      }
      if (RngStream::u01(s.rng_key, 0) < params_.p_loss) s.lost = true;
    }
    if (!injections_.empty()) apply_injections(sid, gen, 0);
  }

  void exec_event(const Event& ev, std::int64_t shift, bool noisy) {
    const std::int64_t gen_a = ev.gen_a + shift;
    SiteState& a = st_[ev.site_a];
    const int ja = ev.slot_a + 1;  // chronological slot phase, 1..4
    if (ev.site_b < 0) {
      // Idle slot: the partner position is outside the lattice. The qubit
      // still waits out the step, suffering the same single-qubit noise.
      if (!a.lost && noisy) {
        if (RngStream::u01(a.rng_key, 8 + ja) < params_.p_comp)
          apply_pick(a, RngStream::bits(a.rng_key, 16 + ja) & 3);
        if (RngStream::u01(a.rng_key, ja) < params_.p_loss) a.lost = true;
      }
      if (!injections_.empty()) apply_injections(ev.site_a, gen_a, ja);
      return;
    }
    const std::int64_t gen_b = ev.gen_b + shift;
    SiteState& b = st_[ev.site_b];
    const int jb = ev.slot_b + 1;
    if (a.gen != gen_a || b.gen != gen_b)
      throw std::logic_error("interaction found a stale generation");
    if (!a.lost && !b.lost) {
      // The CZ conjugates the frame: each side's X component deposits a Z
      // on the other side.
      std::uint8_t az = b.fx, bz = a.fx;
      a.fz ^= az;
      b.fz ^= bz;
      if (noisy) {
        // Two-qubit depolarizing: the draw is keyed on the owning side.
        if (RngStream::u01(a.rng_key, 8 + ja) < params_.p_comp) {
          std::uint64_t v = RngStream::bits(a.rng_key, 16 + ja) & 15;
          apply_pick(a, v & 3);
          apply_pick(b, v >> 2);
        }
        if (RngStream::u01(a.rng_key, ja) < params_.p_loss) a.lost = true;
        if (RngStream::u01(b.rng_key, jb) < params_.p_loss) b.lost = true;
      }
    } else if (!a.lost || !b.lost) {
      // Partner lost: the gate is skipped and the survivor acquires a
      // uniformly random Pauli (identity included) with probability p_lint.
      SiteState& s = a.lost ? b : a;
      const int js = a.lost ? jb : ja;
      if (noisy) {
        if (RngStream::u01(s.rng_key, 24 + js - 1) < params_.p_lint)
          apply_pick(s, RngStream::bits(s.rng_key, 28 + js - 1) & 3);
        if (RngStream::u01(s.rng_key, js) < params_.p_loss) s.lost = true;
      }
    }
    if (!injections_.empty()) {
      apply_injections(ev.site_a, gen_a, ja);
      apply_injections(ev.site_b, gen_b, jb);
    }
  }

  const LatticeGeometry* geo_;
  ErrorModelParams params_;
  RngStream stream_;
  std::vector<SiteState> st_;
  std::deque<RoundRecord> records_;
  std::int64_t next_round_ = 0;
  Plan plan0_, plan1_;
  std::unordered_map<std::uint64_t, std::vector<Injection>> injections_;
};

}  // namespace tcsim
