#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nbspec/graph.hpp"
#include "nbspec/model.hpp"
#include "nbspec/rng.hpp"
#include "nbspec/stats.hpp"
#include "nbspec/weight_law.hpp"

namespace nbspec {

enum class RootWeightMode { Fixed, FromNu, FromNuStar };

// Two-type branching process with Poisson-mixture offspring: a particle of
// weight phi spawns Poi((a/2) Phi^(1) phi) children of its own spin and
// Poi((b/2) Phi^(1) phi) of the opposite spin; non-root weights are i.i.d.
// from the size-biased law nu*.
struct BpParams {
  double a = 0.0;
  double b = 0.0;
  WeightLaw law = WeightLaw::unit();
  int root_spin = +1;
  RootWeightMode root_weight_mode = RootWeightMode::FromNu;
  double root_weight = 1.0;  // used by RootWeightMode::Fixed

  void validate() const {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("branching: a and b must be > 0");
    if (root_spin != 1 && root_spin != -1)
      throw std::invalid_argument("branching: root spin must be +1 or -1");
    if (root_weight_mode == RootWeightMode::Fixed &&
        (root_weight < law.phi_min() || root_weight > law.phi_max()))
      throw std::invalid_argument("branching: fixed root weight outside the law's support");
  }

  TheoryScalars scalars() const {
    ModelParams mp;
    mp.n = 2;
    mp.a = a;
    mp.b = b;
    mp.law = law;
    return theory(mp);
  }
};

// Particles stored in generation order; parents precede children.
struct BpTree {
  std::vector<std::uint32_t> parent;  // root points at itself
  std::vector<std::int8_t> spin;
  std::vector<double> weight;
  std::vector<std::uint32_t> gen_offsets;  // gen t occupies [gen_offsets[t], gen_offsets[t+1])
  bool truncated = false;

  std::size_t particles() const { return parent.size(); }
  int depth() const { return static_cast<int>(gen_offsets.size()) - 2; }

  std::uint32_t gen_begin(int t) const { return gen_offsets[t]; }
  std::uint32_t gen_end(int t) const { return gen_offsets[t + 1]; }
  std::int64_t s(int t) const { return static_cast<std::int64_t>(gen_end(t)) - gen_begin(t); }

  // population split Z_t = (Z_t(+), Z_t(-))
  std::pair<std::int64_t, std::int64_t> z(int t) const {
    std::int64_t zp = 0, zm = 0;
    for (std::uint32_t i = gen_begin(t); i < gen_end(t); ++i) (spin[i] > 0 ? zp : zm) += 1;
    return {zp, zm};
  }

  // weight split Psi_t = (Psi_t(+), Psi_t(-))
  std::pair<double, double> psi(int t) const {
    double pp = 0.0, pm = 0.0;
    for (std::uint32_t i = gen_begin(t); i < gen_end(t); ++i)
      (spin[i] > 0 ? pp : pm) += weight[i];
    return {pp, pm};
  }
};

inline BpTree simulate(const BpParams& params, int depth, std::uint64_t seed,
                       std::size_t particle_budget = 1'000'000) {
  params.validate();
  if (depth < 0) throw std::invalid_argument("branching: depth must be >= 0");
  Rng rng = make_rng(seed);
  const WeightLaw biased = params.law.size_biased();
  const double phi1 = params.law.moment(1);

  BpTree tree;
  tree.gen_offsets = {0, 1};
  tree.parent.push_back(0);
  tree.spin.push_back(static_cast<std::int8_t>(params.root_spin));
  switch (params.root_weight_mode) {
    case RootWeightMode::Fixed: tree.weight.push_back(params.root_weight); break;
    case RootWeightMode::FromNu: tree.weight.push_back(params.law.sample(rng)); break;
    case RootWeightMode::FromNuStar: tree.weight.push_back(biased.sample(rng)); break;
  }

  for (int t = 0; t < depth; ++t) {
    const std::uint32_t begin = tree.gen_begin(t), end = tree.gen_end(t);
    for (std::uint32_t p = begin; p < end; ++p) {
      const double rate_same = 0.5 * params.a * phi1 * tree.weight[p];
      const double rate_opp = 0.5 * params.b * phi1 * tree.weight[p];
      std::poisson_distribution<std::uint32_t> same(rate_same), opp(rate_opp);
      const std::uint32_t n_same = same(rng), n_opp = opp(rng);
      if (tree.particles() + n_same + n_opp > particle_budget) {
        tree.truncated = true;
        // drop the half-filled generation so aggregates stay well-defined
        tree.parent.resize(tree.gen_offsets.back());
        tree.spin.resize(tree.gen_offsets.back());
        tree.weight.resize(tree.gen_offsets.back());
        return tree;
      }
      for (std::uint32_t c = 0; c < n_same + n_opp; ++c) {
        tree.parent.push_back(p);
        tree.spin.push_back(c < n_same ? tree.spin[p] : static_cast<std::int8_t>(-tree.spin[p]));
        tree.weight.push_back(biased.sample(rng));
      }
    }
    tree.gen_offsets.push_back(static_cast<std::uint32_t>(tree.particles()));
  }
  return tree;
}

// Kesten-Stigum martingale X_k(t) = <g_k, Z_t>/mu_k^{t-1} - <g_k, Z_1>,
// defined for t >= 1; the weighted variant uses Psi_t instead of Z_t.
struct MartingaleSeries {
  int k = 1;
  bool weighted = false;
  std::vector<double> values;  // values[i] = X_k(i+1)
};

inline MartingaleSeries martingale_series(const BpTree& tree, const BpParams& params, int k,
                                          bool weighted = false) {
  if (k != 1 && k != 2) throw std::invalid_argument("martingale: k must be 1 or 2");
  if (tree.truncated) throw std::invalid_argument("martingale: tree was truncated");
  const TheoryScalars th = params.scalars();
  const double mu = k == 1 ? th.rho : th.mu2;
  if (mu == 0.0) throw std::invalid_argument("martingale: mu_2 = 0 (a = b), k = 2 undefined");
  MartingaleSeries out;
  out.k = k;
  out.weighted = weighted;
  if (tree.depth() < 1) return out;
  auto project = [&](int t) {
    if (weighted) {
      const auto [pp, pm] = tree.psi(t);
      return spin_basis(k, +1) * pp + spin_basis(k, -1) * pm;
    }
    const auto [zp, zm] = tree.z(t);
    return spin_basis(k, +1) * static_cast<double>(zp) +
           spin_basis(k, -1) * static_cast<double>(zm);
  };
  const double first = project(1);
  double mu_pow = 1.0;
  for (int t = 1; t <= tree.depth(); ++t) {
    out.values.push_back(project(t) / mu_pow - first);
    mu_pow *= mu;
  }
  return out;
}

// Empirical tail of the normalized population size: for each s, the fraction
// of replicates with S_k > s rho^k for some 1 <= k <= T.
struct GrowthTail {
  std::vector<double> s_grid;
  std::vector<double> tail;
  double log_slope = 0.0;  // least-squares slope of log(tail) against s
  int truncated_replicates = 0;
};

inline GrowthTail growth_tail(const BpParams& params, int T, std::vector<double> s_grid,
                              int replicates, std::uint64_t seed,
                              std::size_t particle_budget = 1'000'000) {
  if (replicates < 1000) throw std::invalid_argument("growth_tail: need at least 1000 replicates");
  const double rho = params.scalars().rho;
  GrowthTail out;
  out.s_grid = std::move(s_grid);
  std::vector<std::int64_t> exceed(out.s_grid.size(), 0);
  for (int r = 0; r < replicates; ++r) {
    const BpTree tree = simulate(params, T, derive_seed(seed, r), particle_budget);
    if (tree.truncated) ++out.truncated_replicates;
    double max_ratio = 0.0;
    double rho_pow = 1.0;
    for (int t = 1; t <= tree.depth(); ++t) {
      rho_pow *= rho;
      max_ratio = std::max(max_ratio, static_cast<double>(tree.s(t)) / rho_pow);
    }
    for (std::size_t i = 0; i < out.s_grid.size(); ++i)
      if (max_ratio > out.s_grid[i]) ++exceed[i];
  }
  out.tail.resize(out.s_grid.size());
  for (std::size_t i = 0; i < out.s_grid.size(); ++i)
    out.tail[i] = static_cast<double>(exceed[i]) / static_cast<double>(replicates);
  // fitted slope over the strictly positive tail entries
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int pts = 0;
  for (std::size_t i = 0; i < out.s_grid.size(); ++i) {
    if (out.tail[i] <= 0.0) continue;
    const double x = out.s_grid[i], y = std::log(out.tail[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++pts;
  }
  if (pts >= 2 && sxx * pts != sx * sx)
    out.log_slope = (pts * sxy - sx * sy) / (pts * sxx - sx * sx);
  return out;
}

// ---- cross-generation functional Q_{k,l} -------------------------------------
//
// Q sums, over paths of length 2l+1 from the root that backtrack exactly once
// at step l+1, the spin-basis value times the weight of the endpoint. Computed
// here via the subtree-aggregate rearrangement: for a node u at depth t with
// children the quantity is sum_w S^w_{l-t-1} * sum_{v != w} <g_k, Psi^v_t>,
// needing per-child descendant counts at absolute depth l and weighted spin
// sums at absolute depth 2(t+1)-1. One upward pass serves both.

namespace detail {

struct QAggregates {
  // per-node, only meaningful for nodes at depth 1..l
  std::vector<std::int64_t> count_at_l;  // descendants at absolute depth l
  std::vector<double> psi_plain;         // sum of phi over descendants at depth 2d-1
  std::vector<double> psi_signed;        // sum of spin*phi over the same set
};

inline QAggregates q_aggregates(const BpTree& tree, int ell) {
  QAggregates agg;
  const std::size_t np = tree.particles();
  agg.count_at_l.assign(np, 0);
  agg.psi_plain.assign(np, 0.0);
  agg.psi_signed.assign(np, 0.0);
  // descendant counts at absolute depth ell, climbing to every ancestor
  if (ell <= tree.depth())
    for (std::uint32_t i = tree.gen_begin(ell); i < tree.gen_end(ell); ++i) {
      std::uint32_t node = i;
      while (node != tree.parent[node]) {
        agg.count_at_l[node] += 1;
        node = tree.parent[node];
      }
    }
  // weighted spin sums: depth-D particles contribute to the ancestor at
  // depth (D+1)/2 for odd D
  const int max_depth = std::min(tree.depth(), 2 * ell - 1);
  for (int d = 1; 2 * d - 1 <= max_depth; ++d) {
    const int target = 2 * d - 1;
    for (std::uint32_t i = tree.gen_begin(target); i < tree.gen_end(target); ++i) {
      std::uint32_t node = i;
      for (int up = 0; up < target - d; ++up) node = tree.parent[node];
      agg.psi_plain[node] += tree.weight[i];
      agg.psi_signed[node] += static_cast<double>(tree.spin[i]) * tree.weight[i];
    }
  }
  return agg;
}

}  // namespace detail

// Returns (Q_{1,l}, Q_{2,l}). Requires the tree to reach depth max(1, 2l-1)
// unless it went extinct earlier (extinct trees simply contribute what they
// have; a truncated tree is rejected).
inline std::pair<double, double> q_functional(const BpTree& tree, int ell) {
  if (ell < 0) throw std::invalid_argument("q_functional: ell must be >= 0");
  if (tree.truncated) throw std::invalid_argument("q_functional: tree was truncated");
  const int need = std::max(1, 2 * ell - 1);
  const bool extinct = tree.depth() < need && tree.s(tree.depth()) == 0;
  if (tree.depth() < need && !extinct)
    throw std::invalid_argument("q_functional: tree depth " + std::to_string(tree.depth()) +
                                " below required " + std::to_string(need));
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  if (ell == 0) {
    // length-1 paths root -> child
    double plain = 0.0, sgn = 0.0;
    if (tree.depth() >= 1)
      for (std::uint32_t i = tree.gen_begin(1); i < tree.gen_end(1); ++i) {
        plain += tree.weight[i];
        sgn += static_cast<double>(tree.spin[i]) * tree.weight[i];
      }
    return {inv_sqrt2 * plain, inv_sqrt2 * sgn};
  }
  const auto agg = detail::q_aggregates(tree, ell);
  double q_plain = 0.0, q_signed = 0.0;
  const int top = std::min(ell - 1, tree.depth() - 1);
  for (int t = 0; t <= top; ++t) {
    // children of one parent are contiguous in generation order
    std::uint32_t c = tree.gen_begin(t + 1);
    const std::uint32_t gen_end = tree.gen_end(t + 1);
    while (c < gen_end) {
      const std::uint32_t u = tree.parent[c];
      std::uint32_t run_end = c;
      double total_plain = 0.0, total_signed = 0.0;
      while (run_end < gen_end && tree.parent[run_end] == u) {
        total_plain += agg.psi_plain[run_end];
        total_signed += agg.psi_signed[run_end];
        ++run_end;
      }
      if (run_end - c >= 2) {
        for (std::uint32_t w = c; w < run_end; ++w) {
          const double s = static_cast<double>(agg.count_at_l[w]);
          q_plain += s * (total_plain - agg.psi_plain[w]);
          q_signed += s * (total_signed - agg.psi_signed[w]);
        }
      }
      c = run_end;
    }
  }
  return {inv_sqrt2 * q_plain, inv_sqrt2 * q_signed};
}

// ---- limit checks -------------------------------------------------------------

struct QLimitResult {
  double target = 0.0;  // closed-form limit mean
  double mc_mean = 0.0;
  double mc_se = 0.0;
  int replicates = 0;
  int ell = 0;
  int rejected = 0;  // truncated / too-shallow replicates (resampled away)
};

// Monte-Carlo estimate of E[Q_{k,l}] / mu_k^{2l} for a fixed root, compared
// against the closed-form limit (Phi3/Phi2) rho/(mu_k^2-rho) mu_{k,psi} g_k(x).
inline QLimitResult q_limit_check(const BpParams& params, int k, int ell, int replicates,
                                  std::uint64_t seed, std::size_t particle_budget = 20'000'000) {
  if (params.root_weight_mode != RootWeightMode::Fixed)
    throw std::invalid_argument("q_limit_check: root weight must be Fixed");
  if (k != 1 && k != 2) throw std::invalid_argument("q_limit_check: k must be 1 or 2");
  const TheoryScalars th = params.scalars();
  const double mu = k == 1 ? th.rho : th.mu2;
  if (!(mu * mu > th.rho))
    throw std::invalid_argument(
        "q_limit_check: mu_k^2 <= rho, the limit constant has a pole at mu_k^2 = rho");
  const double phi1 = params.law.moment(1);
  const double mu_root = phi1 * params.root_weight / th.phi2 * mu;
  QLimitResult out;
  out.ell = ell;
  out.replicates = replicates;
  out.target = (th.phi3 / th.phi2) * th.rho / (mu * mu - th.rho) * mu_root *
               spin_basis(k, params.root_spin);
  const double mu_norm = std::pow(mu, 2 * ell);
  std::vector<double> samples;
  samples.reserve(replicates);
  const int depth = std::max(1, 2 * ell - 1);
  std::uint64_t stream = 0;
  while (static_cast<int>(samples.size()) < replicates) {
    const BpTree tree = simulate(params, depth, derive_seed(seed, stream++), particle_budget);
    if (tree.truncated) {
      ++out.rejected;
      if (out.rejected > replicates)
        throw std::runtime_error("q_limit_check: particle budget too small for these parameters");
      continue;
    }
    const auto [q1, q2] = q_functional(tree, ell);
    samples.push_back((k == 1 ? q1 : q2) / mu_norm);
  }
  const SampleStats st = summarize(samples);
  out.mc_mean = st.mean;
  out.mc_se = st.stderr_mean;
  return out;
}

struct DecorrelationResult {
  bool skipped = false;
  std::string message;
  double mean = 0.0;
  double se = 0.0;
  int replicates = 0;
};

// Theorem-28 style check: with the root spin uniform on {+,-},
// E[Q_{1,l} Q_{2,l}] = 0. Requires the uniform-root hypothesis; a fixed-spin
// request is reported as skipped rather than tested.
inline DecorrelationResult decorrelation_check(const BpParams& params, bool root_spin_uniform,
                                               int ell, int replicates, std::uint64_t seed,
                                               std::size_t particle_budget = 20'000'000) {
  DecorrelationResult out;
  out.replicates = replicates;
  if (!root_spin_uniform) {
    out.skipped = true;
    out.message = "root spin is fixed; the decorrelation statement assumes a uniform root spin";
    return out;
  }
  std::vector<double> products;
  products.reserve(replicates);
  const int depth = std::max(1, 2 * ell - 1);
  std::uint64_t stream = 0;
  int rejected = 0;
  while (static_cast<int>(products.size()) < replicates) {
    Rng coin = make_rng(derive_seed(seed, stream, 0));
    BpParams p = params;
    p.root_spin = (coin() & 1) ? +1 : -1;
    const BpTree tree = simulate(p, depth, derive_seed(seed, stream, 1), particle_budget);
    ++stream;
    if (tree.truncated) {
      if (++rejected > replicates)
        throw std::runtime_error("decorrelation_check: particle budget too small");
      continue;
    }
    const auto [q1, q2] = q_functional(tree, ell);
    products.push_back(q1 * q2);
  }
  const SampleStats st = summarize(products);
  out.mean = st.mean;
  out.se = st.stderr_mean;
  return out;
}

// View of a BP tree as a rooted colored graph (root is vertex 0); lets the
// same local functionals run on graph neighborhoods and branching trees.
inline ColoredGraph tree_as_graph(const BpTree& tree) {
  ColoredGraph g;
  g.n = static_cast<std::int64_t>(tree.particles());
  g.spins.assign(tree.spin.begin(), tree.spin.end());
  g.weights.assign(tree.weight.begin(), tree.weight.end());
  for (std::uint32_t i = 1; i < tree.particles(); ++i) {
    const std::uint32_t p = tree.parent[i];
    g.edges.emplace_back(std::min(p, i), std::max(p, i));
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

}  // namespace nbspec
