#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "nbspec/branching.hpp"
#include "nbspec/graph.hpp"
#include "nbspec/nb_operator.hpp"
#include "nbspec/stats.hpp"

namespace nbspec {

// Per-radius statistics of the oriented neighborhood of an edge e = (e1,e2):
// BFS in G minus {e1,e2} from e2; Y_t splits vertex counts by spin, Psi_t
// splits weight sums, S_t is the level size. is_tree reports whether the
// radius-r ball around e2 in the full graph is acyclic.
struct EdgeNeighborhoodStats {
  std::uint32_t edge = 0;
  std::vector<std::array<std::int64_t, 2>> y;   // per t: {count+, count-}
  std::vector<std::array<double, 2>> psi;       // per t: {wsum+, wsum-}
  std::vector<std::int64_t> s;                  // per t: level size
  bool is_tree = true;
};

namespace detail {

// Reusable stamped scratch for repeated BFS passes.
struct BallScratch {
  std::vector<std::uint32_t> stamp;
  std::vector<std::int32_t> dist;
  std::vector<std::uint32_t> queue;
  std::uint32_t epoch = 0;

  void ensure(std::size_t n) {
    if (stamp.size() < n) {
      stamp.assign(n, 0);
      dist.assign(n, 0);
    }
  }
  std::uint32_t next_epoch() { return ++epoch; }
  bool seen(std::uint32_t v, std::uint32_t ep) const { return stamp[v] == ep; }
  void mark(std::uint32_t v, std::int32_t d, std::uint32_t ep) {
    stamp[v] = ep;
    dist[v] = d;
  }
};

// Vertices within distance r of root; returns the visit order (BFS).
inline std::vector<std::uint32_t> vertex_ball(const VertexAdj& adj, std::uint32_t root, int r,
                                              BallScratch& scratch, std::uint32_t ep,
                                              std::int64_t skip_u = -1, std::int64_t skip_v = -1) {
  scratch.mark(root, 0, ep);
  std::vector<std::uint32_t> order{root};
  for (std::size_t qi = 0; qi < order.size(); ++qi) {
    const std::uint32_t v = order[qi];
    if (scratch.dist[v] >= r) continue;
    for (const std::uint32_t* w = adj.begin(v); w != adj.end(v); ++w) {
      if ((static_cast<std::int64_t>(v) == skip_u && static_cast<std::int64_t>(*w) == skip_v) ||
          (static_cast<std::int64_t>(v) == skip_v && static_cast<std::int64_t>(*w) == skip_u))
        continue;
      if (!scratch.seen(*w, ep)) {
        scratch.mark(*w, scratch.dist[v] + 1, ep);
        order.push_back(*w);
      }
    }
  }
  return order;
}

// Number of independent cycles (excess edges) in the induced radius-r ball.
inline std::int64_t ball_excess(const VertexAdj& adj, std::uint32_t root, int r,
                                BallScratch& scratch) {
  const std::uint32_t ep = scratch.next_epoch();
  const auto ball = vertex_ball(adj, root, r, scratch, ep);
  std::int64_t edge_count = 0;
  for (const std::uint32_t v : ball)
    for (const std::uint32_t* w = adj.begin(v); w != adj.end(v); ++w)
      if (*w > v && scratch.seen(*w, ep)) ++edge_count;
  return edge_count - static_cast<std::int64_t>(ball.size()) + 1;
}

}  // namespace detail

inline EdgeNeighborhoodStats edge_ball(const ColoredGraph& g, const NbOperator& op,
                                       std::uint32_t e, int r) {
  if (r < 0) throw std::invalid_argument("edge_ball: radius must be >= 0");
  if (e >= static_cast<std::uint64_t>(op.dim())) throw std::invalid_argument("edge_ball: bad edge id");
  const VertexAdj adj(g);
  detail::BallScratch scratch;
  scratch.ensure(g.n);
  EdgeNeighborhoodStats out;
  out.edge = e;
  out.y.assign(r + 1, {0, 0});
  out.psi.assign(r + 1, {0.0, 0.0});
  out.s.assign(r + 1, 0);
  const std::uint32_t tail = op.tail(e), head = op.head(e);
  const std::uint32_t ep = scratch.next_epoch();
  const auto ball = detail::vertex_ball(adj, head, r, scratch, ep, tail, head);
  for (const std::uint32_t v : ball) {
    const int t = scratch.dist[v];
    const int side = g.spins[v] > 0 ? 0 : 1;
    out.y[t][side] += 1;
    out.psi[t][side] += g.weights[v];
    out.s[t] += 1;
  }
  out.is_tree = detail::ball_excess(adj, head, r, scratch) == 0;
  return out;
}

struct TangleReport {
  int radius = 0;
  std::int64_t vertices_with_cycle = 0;
  bool is_tangle_free = true;  // no radius-ell ball holds two or more cycles
};

inline TangleReport tangle_scan(const ColoredGraph& g, int ell) {
  if (ell < 0) throw std::invalid_argument("tangle_scan: radius must be >= 0");
  const VertexAdj adj(g);
  detail::BallScratch scratch;
  scratch.ensure(g.n);
  TangleReport out;
  out.radius = ell;
  for (std::int64_t v = 0; v < g.n; ++v) {
    const std::int64_t excess = detail::ball_excess(adj, static_cast<std::uint32_t>(v), ell, scratch);
    if (excess >= 1) ++out.vertices_with_cycle;
    if (excess >= 2) out.is_tangle_free = false;
  }
  return out;
}

// ---- edge-space functionals P_{k,l}, S_{k,l} ---------------------------------
//
// P_{k,l}(e) walks out to oriented distance t < l, and for every ordered pair
// of distinct continuations (g,h) not lying at distance t themselves, adds
// <g_k, Psi_t(g)> * S_{l-t-1}(h), where both factors are evaluated on the
// graph with the radius-t ball around e2 removed. S_{k,l}(e) is the
// backtracks-through-e1 term S_l(e) g_k(spin(e1)) phi(e1). On 2l-tree balls
// their sum equals (B^l B*^l chi_k-swapped)(e) exactly.

struct PFunctionalResult {
  double p1 = 0.0, p2 = 0.0;
  double s1 = 0.0, s2 = 0.0;
  std::int64_t s_ell = 0;  // S_l(e), edges at oriented distance l
};

namespace detail {

// First-visit levels of the non-backtracking edge BFS from a start edge,
// optionally restricted to non-deleted edges. Levels 0..max_t inclusive.
struct EdgeBfs {
  std::vector<std::vector<std::uint32_t>> levels;

  EdgeBfs(const NbOperator& op, std::uint32_t start, int max_t,
          const std::function<bool(std::uint32_t)>& deleted, BallScratch& scratch) {
    levels.assign(max_t + 1, {});
    if (deleted && deleted(start)) return;
    const std::uint32_t ep = scratch.next_epoch();
    scratch.mark(start, 0, ep);
    levels[0].push_back(start);
    for (int t = 0; t < max_t; ++t) {
      for (const std::uint32_t f : levels[t]) {
        for (const std::uint32_t nxt : op.succ(f)) {
          if (scratch.seen(nxt, ep)) continue;
          if (deleted && deleted(nxt)) continue;
          scratch.mark(nxt, t + 1, ep);
          levels[t + 1].push_back(nxt);
        }
      }
    }
  }
};

}  // namespace detail

inline PFunctionalResult p_functional(const ColoredGraph& g, const NbOperator& op,
                                      std::uint32_t e, int ell) {
  if (ell < 1) throw std::invalid_argument("p_functional: ell must be >= 1");
  if (e >= static_cast<std::uint64_t>(op.dim()))
    throw std::invalid_argument("p_functional: bad edge id");
  const VertexAdj adj(g);
  detail::BallScratch vertex_scratch, edge_scratch;
  vertex_scratch.ensure(g.n);
  edge_scratch.ensure(op.dim());

  // main oriented-edge BFS from e, levels 0..ell
  const detail::EdgeBfs main_bfs(op, e, ell, nullptr, edge_scratch);
  const std::uint32_t main_ep = edge_scratch.epoch;
  auto main_level = [&](std::uint32_t f) -> int {
    return edge_scratch.seen(f, main_ep) ? edge_scratch.dist[f] : -1;
  };

  PFunctionalResult out;
  out.s_ell = static_cast<std::int64_t>(main_bfs.levels[ell].size());
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  const std::uint32_t e1 = op.tail(e);
  out.s1 = static_cast<double>(out.s_ell) * inv_sqrt2 * g.weights[e1];
  out.s2 = out.s1 * static_cast<double>(g.spins[e1]);

  double p_plain = 0.0, p_signed = 0.0;
  std::vector<bool> in_ball(g.n, false);
  detail::BallScratch sub_scratch;
  sub_scratch.ensure(op.dim());
  for (int t = 0; t < ell; ++t) {
    // vertices within distance t of e2 in the full graph; edges inside the
    // ball are the deleted set for this t
    const std::uint32_t ep = vertex_scratch.next_epoch();
    const auto ball = detail::vertex_ball(adj, op.head(e), t, vertex_scratch, ep);
    for (const std::uint32_t v : ball) in_ball[v] = true;
    auto deleted = [&](std::uint32_t f) {
      return in_ball[op.tail(f)] && in_ball[op.head(f)];
    };
    std::unordered_map<std::uint32_t, std::pair<double, double>> psi_cache;
    std::unordered_map<std::uint32_t, std::int64_t> count_cache;
    auto psi_of = [&](std::uint32_t ge) -> std::pair<double, double> {
      auto it = psi_cache.find(ge);
      if (it != psi_cache.end()) return it->second;
      std::pair<double, double> acc{0.0, 0.0};
      const detail::EdgeBfs bfs(op, ge, t, deleted, sub_scratch);
      for (const std::uint32_t f : bfs.levels[t]) {
        const std::uint32_t h = op.head(f);
        acc.first += g.weights[h];
        acc.second += static_cast<double>(g.spins[h]) * g.weights[h];
      }
      psi_cache.emplace(ge, acc);
      return acc;
    };
    auto count_of = [&](std::uint32_t he) -> std::int64_t {
      auto it = count_cache.find(he);
      if (it != count_cache.end()) return it->second;
      const detail::EdgeBfs bfs(op, he, ell - t - 1, deleted, sub_scratch);
      const std::int64_t c = static_cast<std::int64_t>(bfs.levels[ell - t - 1].size());
      count_cache.emplace(he, c);
      return c;
    };
    for (const std::uint32_t f : main_bfs.levels[t]) {
      const auto succ = op.succ(f);
      for (const std::uint32_t ge : succ) {
        if (main_level(ge) == t) continue;
        const auto [plain, sgn] = psi_of(ge);
        if (plain == 0.0 && sgn == 0.0) continue;
        for (const std::uint32_t he : succ) {
          if (he == ge || main_level(he) == t) continue;
          const double cnt = static_cast<double>(count_of(he));
          p_plain += plain * cnt;
          p_signed += sgn * cnt;
        }
      }
    }
    for (const std::uint32_t v : ball) in_ball[v] = false;
  }
  out.p1 = inv_sqrt2 * p_plain;
  out.p2 = inv_sqrt2 * p_signed;
  return out;
}

// I_l(v) = sum over edges e with head v of P_{2,l}(e); correlated with the
// spins above threshold. O(2m) p_functional evaluations: analysis use.
inline std::vector<double> i_functional(const ColoredGraph& g, const NbOperator& op, int ell) {
  std::vector<double> iv(g.n, 0.0);
  for (std::int64_t e = 0; e < op.dim(); ++e) {
    const auto pf = p_functional(g, op, static_cast<std::uint32_t>(e), ell);
    iv[op.head(static_cast<std::uint32_t>(e))] += pf.p2;
  }
  return iv;
}

// ---- weak law of large numbers harness ---------------------------------------

// An l-local vertex functional together with its declared locality radius;
// usable both on sampled graphs and on branching-process trees.
struct LocalFunctional {
  int radius = 0;
  std::function<double(const ColoredGraph&, const VertexAdj&, std::uint32_t)> eval;
};

inline double local_average(const ColoredGraph& g, const LocalFunctional& tau) {
  if (!tau.eval) throw std::invalid_argument("local_average: empty functional");
  if (g.n == 0) throw std::invalid_argument("local_average: empty graph");
  const VertexAdj adj(g);
  double sum = 0.0;
  for (std::int64_t v = 0; v < g.n; ++v)
    sum += tau.eval(g, adj, static_cast<std::uint32_t>(v));
  return sum / static_cast<double>(g.n);
}

// Monte-Carlo estimate of E[tau(T, o)] on the limit tree: root spin uniform,
// root weight from nu. Pairs with local_average for the law-of-large-numbers
// comparison.
inline SampleStats bp_local_estimate(double a, double b, const WeightLaw& law,
                                     const LocalFunctional& tau, int replicates,
                                     std::uint64_t seed,
                                     std::size_t particle_budget = 1'000'000) {
  std::vector<double> vals;
  vals.reserve(replicates);
  for (int r = 0; r < replicates; ++r) {
    Rng coin = make_rng(derive_seed(seed, r, 0));
    BpParams params;
    params.a = a;
    params.b = b;
    params.law = law;
    params.root_weight_mode = RootWeightMode::FromNu;
    params.root_spin = (coin() & 1) ? +1 : -1;
    const BpTree tree = simulate(params, tau.radius, derive_seed(seed, r, 1), particle_budget);
    const ColoredGraph g = tree_as_graph(tree);
    const VertexAdj adj(g);
    vals.push_back(tau.eval(g, adj, 0));
  }
  return summarize(vals);
}

}  // namespace nbspec
