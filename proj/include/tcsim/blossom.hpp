#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

namespace tcsim {

// Exact minimum-weight perfect matching on a dense graph with integer
// weights, via the primal-dual blossom algorithm (maximum-weight form with
// an affine weight flip large enough to force maximum cardinality).
// Weights must be non-negative; a negative entry means "no edge". All
// computations are in exact integer arithmetic, and tie-breaking is by node
// index, so results are fully deterministic.
struct MatchResult {
  std::vector<int> mate;      // mate[i] = matched partner of node i
  std::int64_t weight = 0;    // total weight in the original (min) domain
};

namespace detail {

class BlossomMatcher {
 public:
  explicit BlossomMatcher(const std::vector<std::vector<std::int64_t>>& w)
      : n_(static_cast<int>(w.size())) {
    const int cap = 2 * n_ + 2;
    g_.assign(cap, std::vector<Edge>(cap));
    lab_.assign(cap, 0);
    match_.assign(cap, 0);
    slack_.assign(cap, 0);
    st_.assign(cap, 0);
    pa_.assign(cap, 0);
    s_.assign(cap, -1);
    vis_.assign(cap, 0);
    flower_.assign(cap, {});
    flower_from_.assign(cap, std::vector<int>(n_ + 1, 0));

    // Affine flip: maximize sum of (kBase - w). kBase is large enough that
    // higher cardinality always beats lower, making the maximum-weight
    // matching perfect whenever a perfect matching exists.
    std::int64_t w_max = 0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (i != j && w[i][j] >= 0) w_max = std::max(w_max, w[i][j]);
    const std::int64_t half = n_ / 2 + 1;
    if (w_max > 0 &&
        half > std::numeric_limits<std::int64_t>::max() / 8 / (w_max + 1))
      throw std::overflow_error("matching weights too large");
    base_ = half * (w_max + 1);

    n_x_ = n_;
    for (int u = 1; u <= n_; ++u)
      for (int v = 1; v <= n_; ++v) {
        std::int64_t wij = (u != v) ? w[u - 1][v - 1] : -1;
        g_[u][v] = Edge{u, v, wij >= 0 ? base_ - wij : 0};
      }
    for (int u = 1; u <= n_; ++u) {
      st_[u] = u;
      flower_from_[u][u] = u;
    }
    std::int64_t lab0 = 0;
    for (int u = 1; u <= n_; ++u)
      for (int v = 1; v <= n_; ++v) lab0 = std::max(lab0, g_[u][v].w);
    for (int u = 1; u <= n_; ++u) lab_[u] = lab0;
  }

  MatchResult solve(const std::vector<std::vector<std::int64_t>>& w) {
    while (phase()) {
    }
    MatchResult res;
    res.mate.assign(n_, -1);
    for (int u = 1; u <= n_; ++u) {
      if (!match_[u]) throw std::runtime_error("no perfect matching exists");
      res.mate[u - 1] = match_[u] - 1;
    }
    for (int u = 1; u <= n_; ++u)
      if (match_[u] > u) {
        std::int64_t wij = w[u - 1][match_[u] - 1];
        if (wij < 0) throw std::logic_error("matched a forbidden edge");
        res.weight += wij;
      }
    return res;
  }

 private:
  struct Edge {
    int u = 0, v = 0;
    std::int64_t w = 0;
  };

  std::int64_t e_delta(const Edge& e) const {
    return lab_[e.u] + lab_[e.v] - g_[e.u][e.v].w * 2;
  }
  void update_slack(int u, int x) {
    if (!slack_[x] || e_delta(g_[u][x]) < e_delta(g_[slack_[x]][x]))
      slack_[x] = u;
  }
  void set_slack(int x) {
    slack_[x] = 0;
    for (int u = 1; u <= n_; ++u)
      if (g_[u][x].w > 0 && st_[u] != x && s_[st_[u]] == 0) update_slack(u, x);
  }
  void q_push(int x) {
    if (x <= n_) {
      q_.push_back(x);
    } else {
      for (int f : flower_[x]) q_push(f);
    }
  }
  void set_st(int x, int b) {
    st_[x] = b;
    if (x > n_)
      for (int f : flower_[x]) set_st(f, b);
  }
  int get_pr(int b, int xr) {
    int pr = static_cast<int>(std::find(flower_[b].begin(), flower_[b].end(),
                                        xr) -
                              flower_[b].begin());
    if (pr % 2 == 1) {
      std::reverse(flower_[b].begin() + 1, flower_[b].end());
      return static_cast<int>(flower_[b].size()) - pr;
    }
    return pr;
  }
  void set_match(int u, int v) {
    match_[u] = g_[u][v].v;
    if (u <= n_) return;
    Edge e = g_[u][v];
    int xr = flower_from_[u][e.u];
    int pr = get_pr(u, xr);
    for (int i = 0; i < pr; ++i)
      set_match(flower_[u][i], flower_[u][i ^ 1]);
    set_match(xr, v);
    std::rotate(flower_[u].begin(), flower_[u].begin() + pr,
                flower_[u].end());
  }
  void augment(int u, int v) {
    for (;;) {
      int xnv = st_[match_[u]];
      set_match(u, v);
      if (!xnv) return;
      set_match(xnv, st_[pa_[xnv]]);
      u = st_[pa_[xnv]];
      v = xnv;
    }
  }
  int get_lca(int u, int v) {
    for (++timer_; u || v; std::swap(u, v)) {
      if (u == 0) continue;
      if (vis_[u] == timer_) return u;
      vis_[u] = timer_;
      u = st_[match_[u]];
      if (u) u = st_[pa_[u]];
    }
    return 0;
  }
  void add_blossom(int u, int lca, int v) {
    int b = n_ + 1;
    while (b <= n_x_ && st_[b]) ++b;
    if (b > n_x_) ++n_x_;
    lab_[b] = 0;
    s_[b] = 0;
    match_[b] = match_[lca];
    flower_[b].clear();
    flower_[b].push_back(lca);
    for (int x = u, y; x != lca; x = st_[pa_[y]]) {
      flower_[b].push_back(x);
      flower_[b].push_back(y = st_[match_[x]]);
      q_push(y);
    }
    std::reverse(flower_[b].begin() + 1, flower_[b].end());
    for (int x = v, y; x != lca; x = st_[pa_[y]]) {
      flower_[b].push_back(x);
      flower_[b].push_back(y = st_[match_[x]]);
      q_push(y);
    }
    set_st(b, b);
    for (int x = 1; x <= n_x_; ++x) g_[b][x].w = g_[x][b].w = 0;
    for (int x = 1; x <= n_; ++x) flower_from_[b][x] = 0;
    for (int xs : flower_[b]) {
      for (int x = 1; x <= n_x_; ++x)
        if (g_[b][x].w == 0 || e_delta(g_[xs][x]) < e_delta(g_[b][x])) {
          g_[b][x] = g_[xs][x];
          g_[x][b] = g_[x][xs];
        }
      for (int x = 1; x <= n_; ++x)
        if (flower_from_[xs][x]) flower_from_[b][x] = xs;
    }
    set_slack(b);
  }
  void expand_blossom(int b) {
    for (int xs : flower_[b]) set_st(xs, xs);
    int xr = flower_from_[b][g_[b][pa_[b]].u];
    int pr = get_pr(b, xr);
    for (int i = 0; i < pr; i += 2) {
      int xs = flower_[b][i], xns = flower_[b][i + 1];
      pa_[xs] = g_[xns][xs].u;
      s_[xs] = 1;
      s_[xns] = 0;
      slack_[xs] = 0;
      set_slack(xns);
      q_push(xns);
    }
    s_[xr] = 1;
    pa_[xr] = pa_[b];
    for (int i = pr + 1; i < static_cast<int>(flower_[b].size()); ++i) {
      int xs = flower_[b][i];
      s_[xs] = -1;
      set_slack(xs);
    }
    st_[b] = 0;
  }
  bool on_found_edge(const Edge& e) {
    int u = st_[e.u], v = st_[e.v];
    if (s_[v] == -1) {
      pa_[v] = e.u;
      s_[v] = 1;
      int nu = st_[match_[v]];
      slack_[v] = slack_[nu] = 0;
      s_[nu] = 0;
      q_push(nu);
    } else if (s_[v] == 0) {
      int lca = get_lca(u, v);
      if (!lca) {
        augment(u, v);
        augment(v, u);
        return true;
      }
      add_blossom(u, lca, v);
    }
    return false;
  }
  bool phase() {
    std::fill(s_.begin(), s_.begin() + n_x_ + 1, -1);
    std::fill(slack_.begin(), slack_.begin() + n_x_ + 1, 0);
    q_.clear();
    for (int x = 1; x <= n_x_; ++x)
      if (st_[x] == x && !match_[x]) {
        pa_[x] = 0;
        s_[x] = 0;
        q_push(x);
      }
    if (q_.empty()) return false;
    for (;;) {
      while (!q_.empty()) {
        int u = q_.front();
        q_.pop_front();
        if (s_[st_[u]] == 1) continue;
        for (int v = 1; v <= n_; ++v)
          if (g_[u][v].w > 0 && st_[u] != st_[v]) {
            if (e_delta(g_[u][v]) == 0) {
              if (on_found_edge(g_[u][v])) return true;
            } else {
              update_slack(u, st_[v]);
            }
          }
      }
      std::int64_t d = std::numeric_limits<std::int64_t>::max();
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b && s_[b] == 1) d = std::min(d, lab_[b] / 2);
      for (int x = 1; x <= n_x_; ++x)
        if (st_[x] == x && slack_[x]) {
          if (s_[x] == -1)
            d = std::min(d, e_delta(g_[slack_[x]][x]));
          else if (s_[x] == 0)
            d = std::min(d, e_delta(g_[slack_[x]][x]) / 2);
        }
      for (int u = 1; u <= n_; ++u) {
        if (s_[st_[u]] == 0) {
          if (lab_[u] <= d) return false;  // no augmenting path remains
          lab_[u] -= d;
        } else if (s_[st_[u]] == 1) {
          lab_[u] += d;
        }
      }
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b) {
          if (s_[b] == 0)
            lab_[b] += d * 2;
          else if (s_[b] == 1)
            lab_[b] -= d * 2;
        }
      q_.clear();
      for (int x = 1; x <= n_x_; ++x)
        if (st_[x] == x && slack_[x] && st_[slack_[x]] != x &&
            e_delta(g_[slack_[x]][x]) == 0)
          if (on_found_edge(g_[slack_[x]][x])) return true;
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b && s_[b] == 1 && lab_[b] == 0) expand_blossom(b);
    }
  }

  int n_;
  int n_x_ = 0;
  std::int64_t base_ = 0;
  int timer_ = 0;
  std::vector<std::vector<Edge>> g_;
  std::vector<std::int64_t> lab_;
  std::vector<int> match_, slack_, st_, pa_, s_, vis_;
  std::vector<std::vector<int>> flower_;
  std::vector<std::vector<int>> flower_from_;
  std::deque<int> q_;
};

}  // namespace detail

// `w` is a symmetric matrix; w[i][j] < 0 marks a forbidden pair. Throws
// std::runtime_error when no perfect matching over allowed pairs exists.
inline MatchResult min_weight_perfect_matching(
    const std::vector<std::vector<std::int64_t>>& w) {
  const int n = static_cast<int>(w.size());
  if (n % 2 != 0) throw std::invalid_argument("odd number of nodes");
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(w[i].size()) != n)
      throw std::invalid_argument("weight matrix is not square");
    for (int j = 0; j < n; ++j)
      if (w[i][j] != w[j][i])
        throw std::invalid_argument("weight matrix is not symmetric");
  }
  if (n == 0) return {};
  detail::BlossomMatcher matcher(w);
  return matcher.solve(w);
}

}  // namespace tcsim
