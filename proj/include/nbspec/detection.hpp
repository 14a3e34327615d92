#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nbspec/graph.hpp"
#include "nbspec/nb_operator.hpp"
#include "nbspec/spectral.hpp"

namespace nbspec {

// Blind spin estimate: label(v) = + iff the incoming-edge sum of the second
// eigenvector exceeds tau/sqrt(n).
struct Assignment {
  std::vector<std::int8_t> labels;
  double tau = 0.0;
  std::vector<double> scores;
  bool solver_converged = true;
};

struct OverlapScore {
  enum class Perm { Identity, Swap };
  double value = 0.0;
  Perm permutation = Perm::Identity;
};

inline std::vector<double> vertex_scores(const NbOperator& op, std::span<const double> xi2) {
  op.check_dim(xi2);
  const auto& ix = op.index();
  const std::int64_t n = static_cast<std::int64_t>(ix.out_offsets.size()) - 1;
  std::vector<double> scores(n, 0.0);
  for (std::int64_t e = 0; e < ix.count; ++e) scores[ix.head[e]] += xi2[e];
  return scores;
}

inline Assignment assign(std::vector<double> scores, double tau, std::int64_t n) {
  Assignment out;
  out.tau = tau;
  const double threshold = tau / std::sqrt(static_cast<double>(std::max<std::int64_t>(n, 1)));
  out.labels.resize(scores.size());
  for (std::size_t v = 0; v < scores.size(); ++v)
    out.labels[v] = scores[v] > threshold ? 1 : -1;
  out.scores = std::move(scores);
  return out;
}

// Agreement fraction maximized over the global spin flip. The identity and
// swap agreement fractions always sum to one, so the value is >= 1/2.
inline OverlapScore overlap(std::span<const std::int8_t> est, std::span<const std::int8_t> truth) {
  if (est.size() != truth.size()) throw std::invalid_argument("overlap: length mismatch");
  if (est.empty()) throw std::invalid_argument("overlap: empty labels");
  std::int64_t agree = 0;
  for (std::size_t v = 0; v < est.size(); ++v)
    if (est[v] == truth[v]) ++agree;
  const std::int64_t disagree = static_cast<std::int64_t>(est.size()) - agree;
  OverlapScore out;
  if (agree >= disagree) {
    out.value = static_cast<double>(agree) / static_cast<double>(est.size());
    out.permutation = OverlapScore::Perm::Identity;
  } else {
    out.value = static_cast<double>(disagree) / static_cast<double>(est.size());
    out.permutation = OverlapScore::Perm::Swap;
  }
  return out;
}

struct DetectConfig {
  double tau = 0.0;
  bool tau_from_median = false;  // data-driven threshold for imbalanced inputs
  IterOptions solver;
};

struct DetectResult {
  Assignment assignment;
  SpectrumReport spectrum;
};

// End-to-end blind detection. Only the edge structure of g is read; spins and
// weights never enter (the spectrum of B needs neither).
inline DetectResult detect(const ColoredGraph& g, const DetectConfig& config = {}) {
  if (g.m() == 0) throw std::invalid_argument("detect: graph has no edges");
  const NbOperator op = NbOperator::build(g);
  DetectResult out;
  out.spectrum = top_two_iterative(op, config.solver);
  std::vector<double> scores = vertex_scores(op, out.spectrum.xi2);
  scores.resize(g.n, 0.0);  // isolated vertices score 0
  double tau = config.tau;
  if (config.tau_from_median) {
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    tau = sorted[sorted.size() / 2] * std::sqrt(static_cast<double>(g.n));
  }
  out.assignment = assign(std::move(scores), tau, g.n);
  out.assignment.solver_converged = out.spectrum.converged;
  return out;
}

}  // namespace nbspec
