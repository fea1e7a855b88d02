#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tcsim {

// A Pauli operator on n qubits stored as i^phase * prod_q X^x[q] Z^z[q],
// with dense per-qubit factors and the phase kept as an exponent of i mod 4.
// The letter Y uses the convention Y = i*X*Z, so a Y factor contributes
// x = z = 1 plus one unit of phase.
class PauliString {
 public:
  explicit PauliString(std::size_t n) : x_(n, 0), z_(n, 0), phase_(0) {}

  static PauliString identity(std::size_t n) { return PauliString(n); }

  // Parse canonical letters, e.g. "XIZY". An optional leading '+' or '-' sets
  // the sign; whitespace between letters is ignored.
  static PauliString from_letters(std::string_view s) {
    PauliString p(0);
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '+')) ++i;
    if (i < s.size() && s[i] == '-') {
      p.phase_ = 2;
      ++i;
    }
    for (; i < s.size(); ++i) {
      char c = s[i];
      if (c == ' ' || c == '\t') continue;
      switch (c) {
        case 'I': p.x_.push_back(0); p.z_.push_back(0); break;
        case 'X': p.x_.push_back(1); p.z_.push_back(0); break;
        case 'Z': p.x_.push_back(0); p.z_.push_back(1); break;
        case 'Y':
          p.x_.push_back(1);
          p.z_.push_back(1);
          p.phase_ = (p.phase_ + 1) & 3;
          break;
        default:
          throw std::invalid_argument("unknown Pauli letter in string");
      }
    }
    return p;
  }

  std::size_t num_qubits() const { return x_.size(); }
  bool x_bit(std::size_t q) const { return x_[q] != 0; }
  bool z_bit(std::size_t q) const { return z_[q] != 0; }
  void set_x(std::size_t q, bool v) { x_[q] = v ? 1 : 0; }
  void set_z(std::size_t q, bool v) { z_[q] = v ? 1 : 0; }

  // Exponent of i in the X/Z factored form.
  int phase_exponent() const { return phase_; }

  // Exponent of i in front of the canonical letter form (XZ = i^3 Y).
  int canonical_phase() const {
    int y = 0;
    for (std::size_t q = 0; q < x_.size(); ++q) y += (x_[q] & z_[q]);
    return (phase_ + 3 * y) & 3;
  }

  char letter(std::size_t q) const {
    static constexpr char kTab[4] = {'I', 'X', 'Z', 'Y'};
    return kTab[(x_[q] ? 1 : 0) | (z_[q] ? 2 : 0)];
  }

  // Letters only, optionally separated, no sign prefix.
  std::string letters(char sep = '\0') const {
    std::string out;
    for (std::size_t q = 0; q < x_.size(); ++q) {
      if (q && sep) out.push_back(sep);
      out.push_back(letter(q));
    }
    return out;
  }

  // Sign prefix ("+", "i", "-", "-i") followed by letters.
  std::string to_string() const {
    static constexpr const char* kSign[4] = {"+", "i", "-", "-i"};
    return std::string(kSign[canonical_phase()]) + letters();
  }

  PauliString& operator*=(const PauliString& rhs) {
    if (rhs.x_.size() != x_.size())
      throw std::invalid_argument("Pauli product size mismatch");
    int extra = 0;
    for (std::size_t q = 0; q < x_.size(); ++q) {
      extra += (z_[q] & rhs.x_[q]);  // Z passing X picks up -1
      x_[q] ^= rhs.x_[q];
      z_[q] ^= rhs.z_[q];
    }
    phase_ = (phase_ + rhs.phase_ + 2 * extra) & 3;
    return *this;
  }
  friend PauliString operator*(PauliString a, const PauliString& b) {
    a *= b;
    return a;
  }

  bool commutes_with(const PauliString& other) const {
    if (other.x_.size() != x_.size())
      throw std::invalid_argument("Pauli commutation size mismatch");
    int s = 0;
    for (std::size_t q = 0; q < x_.size(); ++q)
      s ^= (x_[q] & other.z_[q]) ^ (z_[q] & other.x_[q]);
    return s == 0;
  }

  // Conjugate by CZ acting on qubits (a, b):
  //   X_a -> X_a Z_b,  X_b -> X_b Z_a,  Z factors unchanged,
  // and simultaneous X on both sides contributes a sign.
  void apply_cz(std::size_t a, std::size_t b) {
    if (a == b || a >= x_.size() || b >= x_.size())
      throw std::invalid_argument("CZ qubit indices invalid");
    phase_ = (phase_ + 2 * (x_[a] & x_[b])) & 3;
    z_[a] ^= x_[b];
    z_[b] ^= x_[a];
  }

  friend bool operator==(const PauliString& a, const PauliString& b) {
    return a.x_ == b.x_ && a.z_ == b.z_ && a.phase_ == b.phase_;
  }

 private:
  std::vector<std::uint8_t> x_, z_;
  int phase_;
};

// Conjugate a Pauli by a single CZ (default: the only CZ on a two-qubit
// register).
inline PauliString cz_conjugate(PauliString p, std::size_t a = 0,
                                std::size_t b = 1) {
  p.apply_cz(a, b);
  return p;
}

// One CZ application per entry, applied in order.
using CzCircuit = std::vector<std::pair<std::size_t, std::size_t>>;

// Conjugate every element of a set by the same CZ circuit.
inline std::vector<PauliString> conjugate_set(std::vector<PauliString> s,
                                              const CzCircuit& circuit) {
  for (auto& p : s)
    for (auto [a, b] : circuit) p.apply_cz(a, b);
  return s;
}

// An undirected simple graph whose vertices carry qubits; building the
// cluster state applies one CZ per edge.
struct ClusterGraph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  void validate() const {
    std::vector<std::vector<std::uint8_t>> seen(n,
                                                std::vector<std::uint8_t>(n, 0));
    for (auto [a, b] : edges) {
      if (a >= n || b >= n) throw std::invalid_argument("edge endpoint out of range");
      if (a == b) throw std::invalid_argument("self-loop in cluster graph");
      if (seen[a][b]) throw std::invalid_argument("duplicate edge in cluster graph");
      seen[a][b] = seen[b][a] = 1;
    }
  }
};

// Stabilizer generators of the cluster state on g: for each vertex i,
// A_i = X_i * prod_{j ~ i} Z_j. Equal to conjugating the all-X generators of
// |+>^n through the edge CZs.
inline std::vector<PauliString> cluster_stabilizers(const ClusterGraph& g) {
  g.validate();
  std::vector<PauliString> out;
  out.reserve(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    PauliString p(g.n);
    p.set_x(i, true);
    out.push_back(std::move(p));
  }
  for (auto [a, b] : g.edges)
    for (auto& p : out) p.apply_cz(a, b);
  return out;
}

// A set of stabilizer generators: mutually commuting, Hermitian (phase +1 or
// -1; a leading +/-i is rejected), all on the same register.
class StabilizerSet {
 public:
  explicit StabilizerSet(std::vector<PauliString> elems)
      : elems_(std::move(elems)) {
    for (std::size_t i = 0; i < elems_.size(); ++i) {
      if (elems_[i].num_qubits() != elems_[0].num_qubits())
        throw std::invalid_argument("stabilizer register size mismatch");
      int ph = elems_[i].canonical_phase();
      if (ph == 1 || ph == 3)
        throw std::invalid_argument("stabilizer with imaginary phase rejected");
      for (std::size_t j = 0; j < i; ++j)
        if (!elems_[i].commutes_with(elems_[j]))
          throw std::invalid_argument("stabilizers must mutually commute");
    }
  }

  std::size_t size() const { return elems_.size(); }
  const PauliString& operator[](std::size_t i) const { return elems_[i]; }
  const std::vector<PauliString>& elements() const { return elems_; }

 private:
  std::vector<PauliString> elems_;
};

// Product of all elements of a set, left to right.
inline PauliString stabilizer_product(const std::vector<PauliString>& set) {
  if (set.empty()) throw std::invalid_argument("product of empty set");
  PauliString acc = set[0];
  for (std::size_t i = 1; i < set.size(); ++i) acc *= set[i];
  return acc;
}

inline PauliString stabilizer_product(const StabilizerSet& set) {
  return stabilizer_product(set.elements());
}

}  // namespace tcsim
