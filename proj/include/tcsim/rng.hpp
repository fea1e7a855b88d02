#pragma once

#include <cstdint>

// Counter-based randomness. Every stochastic decision in a simulation is a
// pure function of a key (seed, trial, generation, site, draw id), so a
// decision re-executed after a snapshot restore — or executed in a different
// block-split of the same run — always comes out the same. This is what makes
// the capped/continued simulation protocol and multi-worker runs reproducible.

namespace tcsim {

// Finalizer of the splitmix64 generator; a high-quality 64-bit mixing
// permutation.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

// Hash-chain combiner: fold one more key component into an accumulated hash.
constexpr std::uint64_t rng_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h + 0x9e3779b97f4a7c15ull + v);
}

// Uniform double in [0, 1) from 53 high bits.
constexpr double rng_u01(std::uint64_t u) {
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

// A keyed stream: fix (seed, trial) once, then draw by (generation, site,
// draw id). Draw ids are small enumerators chosen by the caller; a given
// (generation, site, id) triple must be drawn through at most one code path.
class RngStream {
 public:
  RngStream() : base_(0) {}
  RngStream(std::uint64_t seed, std::uint64_t trial)
      : base_(rng_combine(rng_combine(0x7c5c3ac1u, seed), trial)) {}

  // Per-(generation, site) prefix; hot paths cache it and pay one mix per draw.
  std::uint64_t site_key(std::int64_t generation, std::uint32_t site) const {
    return rng_combine(rng_combine(base_, static_cast<std::uint64_t>(generation)),
                       site);
  }
  static std::uint64_t bits(std::uint64_t site_key, std::uint32_t draw_id) {
    return rng_combine(site_key, draw_id);
  }
  static double u01(std::uint64_t site_key, std::uint32_t draw_id) {
    return rng_u01(bits(site_key, draw_id));
  }

 private:
  std::uint64_t base_;
};

}  // namespace tcsim
