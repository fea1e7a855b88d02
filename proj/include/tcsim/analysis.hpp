#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tcsim {

inline void validate_distance(int d) {
  if (d < 3 || d % 2 == 0)
    throw std::invalid_argument("code distance must be odd and at least 3");
}

// Effective distance under pure computational error: minimum number of error
// events on a shortest logical chain that the matcher cannot repair.
inline int d_e(int d) {
  validate_distance(d);
  return (d + 1) / 2;
}

// Minimum number of loss events that can cause a logical failure. Without
// interaction errors a chain of d-1 merges is needed; with them a single loss
// can also act as a two-error chain, lowering the count to floor((d+3)/4).
inline int min_loss_failures(int d, bool lint) {
  validate_distance(d);
  return lint ? (d + 3) / 4 : d - 1;
}

// A plumbing piece: the space-time volume (in qubit-rounds) that one
// distance-d logical structure occupies, with edge length n = floor(5d/4)
// cells. Each cell is effectively 6 qubits: 6n^2 physical qubits sustained
// for n cell rounds.
struct PlumbingPiece {
  int d = 0;
  long long n = 0;        // edge length in cells
  long long q_phys = 0;   // physical qubits, 6 n^2
  long long volume = 0;   // qubit-rounds, 6 n^3
};

inline PlumbingPiece plumbing(int d) {
  validate_distance(d);
  PlumbingPiece p;
  p.d = d;
  p.n = (5LL * d) / 4;
  p.q_phys = 6 * p.n * p.n;
  p.volume = 6 * p.n * p.n * p.n;
  return p;
}

namespace detail {
inline long long floordiv(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace detail

// Extrapolate a logical error rate to a higher distance from two measured
// points: a = P_L at distance d_b - 2, b = P_L at distance d_b. Every two
// steps of distance suppress by the same factor a/b:
//   P_L(d) ~= b / (a/b)^floor((d - d_b)/2)
// Requires strictly suppressing inputs (b < a).
inline double extrapolate(double a, double b, int d_b, int d_target) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("extrapolation rates must be positive");
  if (b >= a)
    throw std::domain_error(
        "non-suppressing input: rate at the larger distance must be smaller");
  validate_distance(d_b);
  validate_distance(d_target);
  long long k = detail::floordiv(d_target - d_b, 2);
  return b / std::pow(a / b, static_cast<double>(k));
}

// Least-squares slope of log(y) against log(x); the asymptotic exponent of a
// power law. Requires at least 3 strictly positive points.
inline double fit_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3)
    throw std::domain_error("slope fit needs at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0))
      throw std::domain_error("slope fit needs positive coordinates");
    double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(points.size());
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::domain_error("slope fit x values degenerate");
  return (n * sxy - sx * sy) / denom;
}

// One measured logical error rate, used as input to overhead projection.
struct CurvePoint {
  double p_loss = 0.0;
  int d = 0;
  double p_l = 0.0;
};

struct OverheadRow {
  bool baseline = false;   // the loss-free reference row
  bool has_p_loss = false; // false only for the baseline row
  double p_loss = 0.0;
  bool reachable = true;   // false when no distance meets the target
  int d = 0;
  double overhead = 0.0;   // volume relative to the baseline distance
  long long q_phys = 0;
  long long volume = 0;
};

// Project the overhead of operating at each loss rate: for every p_loss
// group, extrapolate from the two highest measured distances to find the
// smallest odd distance whose projected P_L meets `target`, then compare
// plumbing-piece volumes against the baseline distance. baseline_d < 0
// derives the baseline from the p_loss = 0 group.
inline std::vector<OverheadRow> overhead_table(
    const std::vector<CurvePoint>& curves, double target, int baseline_d = -1,
    int max_d = 499) {
  if (!(target > 0.0)) throw std::invalid_argument("target must be positive");
  std::map<double, std::map<int, double>> groups;  // p_loss -> d -> P_L
  for (const auto& c : curves) {
    validate_distance(c.d);
    if (!(c.p_l > 0.0))
      throw std::invalid_argument("curve points need positive P_L");
    groups[c.p_loss][c.d] = c.p_l;
  }

  // Smallest odd distance meeting the target for one group, or 0 if none.
  auto required_d = [&](const std::map<int, double>& byd) -> int {
    if (byd.size() < 2)
      throw std::invalid_argument(
          "each p_loss group needs at least two distances");
    auto it = byd.rbegin();
    int d_b = it->first;
    double b = it->second;
    ++it;
    double a = it->second;
    if (b >= a) return 0;  // not suppressing: unreachable
    for (int d = 3; d <= max_d; d += 2)
      if (extrapolate(a, b, d_b, d) <= target) return d;
    return 0;
  };

  int base_d = baseline_d;
  if (base_d < 0) {
    auto it = groups.find(0.0);
    if (it == groups.end())
      throw std::invalid_argument(
          "baseline distance not given and no p_loss = 0 curve present");
    base_d = required_d(it->second);
    if (base_d == 0)
      throw std::invalid_argument("baseline curve cannot reach the target");
  }
  validate_distance(base_d);
  double base_volume = static_cast<double>(plumbing(base_d).volume);

  std::vector<OverheadRow> rows;
  {
    OverheadRow r;
    r.baseline = true;
    r.has_p_loss = false;
    r.d = base_d;
    r.overhead = 1.0;
    r.q_phys = plumbing(base_d).q_phys;
    r.volume = plumbing(base_d).volume;
    rows.push_back(r);
  }
  for (const auto& [p_loss, byd] : groups) {
    if (p_loss == 0.0) continue;  // covered by the baseline row
    OverheadRow r;
    r.has_p_loss = true;
    r.p_loss = p_loss;
    int d = required_d(byd);
    if (d == 0) {
      r.reachable = false;
    } else {
      r.reachable = true;
      r.d = d;
      r.q_phys = plumbing(d).q_phys;
      r.volume = plumbing(d).volume;
      r.overhead = static_cast<double>(r.volume) / base_volume;
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace tcsim
