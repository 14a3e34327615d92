#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nbspec/io_util.hpp"
#include "nbspec/model.hpp"
#include "nbspec/rng.hpp"

namespace nbspec {

using Edge = std::pair<std::uint32_t, std::uint32_t>;  // u < v

// Vertex-labelled output of the DC-SBM sampler: spins in {+1,-1}, positive
// weights, simple undirected edge list (u < v, sorted). Immutable once built.
struct ColoredGraph {
  std::int64_t n = 0;
  std::vector<std::int8_t> spins;
  std::vector<double> weights;
  std::vector<Edge> edges;

  std::int64_t m() const { return static_cast<std::int64_t>(edges.size()); }

  void validate() const {
    if (n < 0) throw std::invalid_argument("graph: negative vertex count");
    if (spins.size() != static_cast<std::size_t>(n) || weights.size() != static_cast<std::size_t>(n))
      throw std::invalid_argument("graph: label arrays do not match n");
    for (std::int64_t v = 0; v < n; ++v) {
      if (spins[v] != 1 && spins[v] != -1) throw std::invalid_argument("graph: spin must be +1 or -1");
      if (!(weights[v] > 0.0)) throw std::invalid_argument("graph: weight must be positive");
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto [u, v] = edges[i];
      if (u >= v || v >= static_cast<std::uint64_t>(n))
        throw std::invalid_argument("graph: edge endpoints out of order or range");
      if (i > 0 && !(edges[i - 1] < edges[i]))
        throw std::invalid_argument("graph: edges not sorted or duplicated");
    }
  }

  bool operator==(const ColoredGraph& o) const {
    return n == o.n && spins == o.spins && weights == o.weights && edges == o.edges;
  }
};

// Vertex adjacency in CSR form; shared helper for BFS-style passes.
struct VertexAdj {
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> neighbors;

  explicit VertexAdj(const ColoredGraph& g) {
    offsets.assign(static_cast<std::size_t>(g.n) + 1, 0);
    for (const auto& [u, v] : g.edges) {
      ++offsets[u + 1];
      ++offsets[v + 1];
    }
    for (std::size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
    neighbors.resize(2 * g.edges.size());
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& [u, v] : g.edges) {
      neighbors[cursor[u]++] = v;
      neighbors[cursor[v]++] = u;
    }
  }

  std::uint32_t degree(std::uint32_t v) const { return offsets[v + 1] - offsets[v]; }
  const std::uint32_t* begin(std::uint32_t v) const { return neighbors.data() + offsets[v]; }
  const std::uint32_t* end(std::uint32_t v) const { return neighbors.data() + offsets[v + 1]; }
};

struct GenReport {
  std::int64_t m = 0;
  std::int64_t n_plus = 0;
  std::int64_t n_minus = 0;
  std::int64_t clipped_pairs = 0;  // pairs whose Bernoulli parameter exceeded 1
};

enum class SampleStrategy { Auto, Pairwise, Blocked };

namespace detail {

// Vertices beyond this count switch from the O(n^2) pairwise scan to
// per-block binomial sampling (identical law: probabilities are constant
// within blocks of equal (spin, weight-atom)).
constexpr std::int64_t kPairwiseLimit = 50'000;

inline void assign_spins_weights(const ModelParams& params, Rng& rng, ColoredGraph& g,
                                 GenReport& report) {
  const std::int64_t n = params.n;
  g.spins.resize(n);
  g.weights.resize(n);
  if (params.balance == BalanceMode::ExactHalves) {
    const std::int64_t half = (n + 1) / 2;  // + goes to the first ceil(n/2) ids
    for (std::int64_t v = 0; v < n; ++v) g.spins[v] = v < half ? 1 : -1;
  } else {
    std::uniform_int_distribution<int> coin(0, 1);
    for (std::int64_t v = 0; v < n; ++v) g.spins[v] = coin(rng) ? 1 : -1;
  }
  for (std::int64_t v = 0; v < n; ++v) {
    g.weights[v] = params.law.sample(rng);
    if (g.spins[v] > 0)
      ++report.n_plus;
    else
      ++report.n_minus;
  }
}

inline void sample_pairwise(const ModelParams& params, Rng& rng, ColoredGraph& g,
                            GenReport& report) {
  const std::int64_t n = params.n;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::int64_t u = 0; u < n; ++u) {
    for (std::int64_t v = u + 1; v < n; ++v) {
      const double rate = g.spins[u] == g.spins[v] ? params.a : params.b;
      const double p = g.weights[u] * g.weights[v] * rate / static_cast<double>(n);
      if (p > 1.0) ++report.clipped_pairs;
      if (u01(rng) < std::min(1.0, p))
        g.edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
    }
  }
}

// Blocked sampler: group vertices by (spin, weight atom); within a block pair
// the Bernoulli parameter is constant, so the edge count is Binomial and the
// chosen pairs are a uniform subset.
inline void sample_blocked(const ModelParams& params, Rng& rng, ColoredGraph& g,
                           GenReport& report) {
  const std::int64_t n = params.n;
  const auto& atoms = params.law.atoms();
  const std::size_t num_blocks = 2 * atoms.size();
  std::vector<std::vector<std::uint32_t>> blocks(num_blocks);
  for (std::int64_t v = 0; v < n; ++v) {
    const std::size_t ai = params.law.atom_index(g.weights[v]);
    blocks[2 * ai + (g.spins[v] > 0 ? 0 : 1)].push_back(static_cast<std::uint32_t>(v));
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t bi = 0; bi < num_blocks; ++bi) {
    for (std::size_t bj = bi; bj < num_blocks; ++bj) {
      const auto& vi = blocks[bi];
      const auto& vj = blocks[bj];
      if (vi.empty() || vj.empty()) continue;
      const double wi = atoms[bi / 2].value, wj = atoms[bj / 2].value;
      const bool same_spin = (bi % 2) == (bj % 2);
      const double raw = wi * wj * (same_spin ? params.a : params.b) / static_cast<double>(n);
      const std::int64_t pairs =
          bi == bj ? static_cast<std::int64_t>(vi.size()) * (static_cast<std::int64_t>(vi.size()) - 1) / 2
                   : static_cast<std::int64_t>(vi.size()) * static_cast<std::int64_t>(vj.size());
      if (pairs == 0) continue;
      if (raw > 1.0) report.clipped_pairs += pairs;
      const double p = std::min(1.0, raw);
      std::binomial_distribution<std::int64_t> count_dist(pairs, p);
      const std::int64_t count = count_dist(rng);
      std::unordered_set<std::uint64_t> chosen;
      chosen.reserve(static_cast<std::size_t>(count) * 2);
      std::uniform_int_distribution<std::int64_t> pick(0, pairs - 1);
      while (static_cast<std::int64_t>(chosen.size()) < count)
        chosen.insert(static_cast<std::uint64_t>(pick(rng)));
      for (std::uint64_t code : chosen) {
        std::uint32_t u, v;
        if (bi == bj) {
          // unrank an unordered pair {r,c} with r < c from the triangle
          const std::uint64_t sz = vi.size();
          std::uint64_t r = 0;
          std::uint64_t rem = code;
          while (rem >= sz - 1 - r) {
            rem -= sz - 1 - r;
            ++r;
          }
          u = vi[r];
          v = vi[r + 1 + rem];
        } else {
          u = vi[code / vj.size()];
          v = vj[code % vj.size()];
        }
        if (u > v) std::swap(u, v);
        g.edges.emplace_back(u, v);
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
}

}  // namespace detail

inline std::pair<ColoredGraph, GenReport> sample_graph(const ModelParams& params,
                                                       SampleStrategy strategy = SampleStrategy::Auto) {
  params.validate();
  ColoredGraph g;
  GenReport report;
  g.n = params.n;
  Rng rng = make_rng(derive_seed(params.seed, 0));
  detail::assign_spins_weights(params, rng, g, report);
  if (strategy == SampleStrategy::Auto)
    strategy = params.n <= detail::kPairwiseLimit ? SampleStrategy::Pairwise : SampleStrategy::Blocked;
  if (strategy == SampleStrategy::Pairwise) {
    if (params.n > detail::kPairwiseLimit)
      throw std::length_error("sample_graph: n exceeds the pairwise enumeration capacity (" +
                              std::to_string(detail::kPairwiseLimit) + ")");
    detail::sample_pairwise(params, rng, g, report);
  } else {
    detail::sample_blocked(params, rng, g, report);
  }
  report.m = g.m();
  return {std::move(g), report};
}

// ---- plain-text graph file format ------------------------------------------
// line 1:        n m
// lines 2..n+1:  vertex_id spin(+|-) weight
// remaining m:   u v   (u < v)

inline void write_graph(const ColoredGraph& g, std::ostream& out) {
  out << g.n << ' ' << g.edges.size() << '\n';
  for (std::int64_t v = 0; v < g.n; ++v)
    out << v << ' ' << (g.spins[v] > 0 ? '+' : '-') << ' ' << fmt_double(g.weights[v]) << '\n';
  for (const auto& [u, v] : g.edges) out << u << ' ' << v << '\n';
}

inline void write_graph(const ColoredGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_graph(g, out);
  if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

inline ColoredGraph read_graph(std::istream& in) {
  auto fail = [](std::int64_t line, const std::string& what) {
    throw std::runtime_error("graph file, line " + std::to_string(line) + ": " + what);
  };
  std::string line;
  std::int64_t lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) fail(lineno + 1, "unexpected end of file");
    ++lineno;
  };
  next_line();
  std::int64_t n = -1, m = -1;
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> n >> m) || n < 0 || m < 0 || (hs >> extra)) fail(lineno, "malformed header, expected 'n m'");
  }
  ColoredGraph g;
  g.n = n;
  g.spins.resize(n);
  g.weights.resize(n);
  for (std::int64_t v = 0; v < n; ++v) {
    next_line();
    std::istringstream vs(line);
    std::int64_t id = -1;
    std::string spin_tok;
    double weight = 0.0;
    if (!(vs >> id >> spin_tok >> weight) || id != v)
      fail(lineno, "malformed vertex line, expected '" + std::to_string(v) + " spin weight'");
    if (spin_tok == "+")
      g.spins[v] = 1;
    else if (spin_tok == "-")
      g.spins[v] = -1;
    else
      fail(lineno, "spin '" + spin_tok + "' outside {+,-}");
    if (!(weight > 0.0)) fail(lineno, "non-positive weight " + fmt_double(weight));
    g.weights[v] = weight;
  }
  g.edges.reserve(m);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(static_cast<std::size_t>(m) * 2);
  for (std::int64_t i = 0; i < m; ++i) {
    next_line();
    std::istringstream es(line);
    std::int64_t u = -1, v = -1;
    if (!(es >> u >> v) || u < 0 || v < 0 || u >= n || v >= n) fail(lineno, "malformed edge line");
    if (u == v) fail(lineno, "self-loop " + std::to_string(u));
    if (u > v) fail(lineno, "edge endpoints not in u < v order");
    if (!seen.insert(static_cast<std::uint64_t>(u) << 32 | static_cast<std::uint64_t>(v)).second)
      fail(lineno, "duplicate edge " + std::to_string(u) + " " + std::to_string(v));
    g.edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

inline ColoredGraph read_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_graph(in);
}

}  // namespace nbspec
