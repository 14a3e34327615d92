#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nbspec/graph.hpp"

namespace nbspec {

// Index over the 2m oriented edges of a simple graph. Undirected edge i
// {u,v} with u < v owns oriented ids 2i = (u,v) and 2i+1 = (v,u), so
// reversal is an XOR with 1.
struct OrientedEdgeIndex {
  std::int64_t count = 0;  // 2m
  std::vector<std::uint32_t> tail;
  std::vector<std::uint32_t> head;
  std::vector<std::uint32_t> out_offsets;  // per vertex: oriented edges with that tail
  std::vector<std::uint32_t> out_edges;

  static std::uint32_t reverse(std::uint32_t e) { return e ^ 1u; }
};

// Edge-space non-backtracking matrix B with successor lists
// succ(e) = { f : head(e) = tail(f), tail(e) != head(f) } stored explicitly
// (CSR). B, its adjoint and the reversal involution P act through matvec,
// matvec_adjoint and swap.
class NbOperator {
 public:
  static NbOperator build(const ColoredGraph& g) {
    NbOperator op;
    const std::int64_t m = g.m();
    auto& ix = op.index_;
    ix.count = 2 * m;
    ix.tail.resize(ix.count);
    ix.head.resize(ix.count);
    for (std::int64_t i = 0; i < m; ++i) {
      const auto [u, v] = g.edges[i];
      ix.tail[2 * i] = u;
      ix.head[2 * i] = v;
      ix.tail[2 * i + 1] = v;
      ix.head[2 * i + 1] = u;
    }
    ix.out_offsets.assign(static_cast<std::size_t>(g.n) + 1, 0);
    for (std::int64_t e = 0; e < ix.count; ++e) ++ix.out_offsets[ix.tail[e] + 1];
    for (std::size_t i = 1; i < ix.out_offsets.size(); ++i) ix.out_offsets[i] += ix.out_offsets[i - 1];
    ix.out_edges.resize(ix.count);
    {
      std::vector<std::uint32_t> cursor(ix.out_offsets.begin(), ix.out_offsets.end() - 1);
      for (std::int64_t e = 0; e < ix.count; ++e)
        ix.out_edges[cursor[ix.tail[e]]++] = static_cast<std::uint32_t>(e);
    }
    // succ(e) = out-edges of head(e) minus the reversal of e
    op.succ_offsets_.assign(static_cast<std::size_t>(ix.count) + 1, 0);
    for (std::int64_t e = 0; e < ix.count; ++e) {
      const std::uint32_t h = ix.head[e];
      op.succ_offsets_[e + 1] = ix.out_offsets[h + 1] - ix.out_offsets[h] - 1;
    }
    for (std::size_t i = 1; i < op.succ_offsets_.size(); ++i)
      op.succ_offsets_[i] += op.succ_offsets_[i - 1];
    op.succ_edges_.resize(op.succ_offsets_.back());
    for (std::int64_t e = 0; e < ix.count; ++e) {
      const std::uint32_t h = ix.head[e];
      const std::uint32_t rev = OrientedEdgeIndex::reverse(static_cast<std::uint32_t>(e));
      std::uint32_t* dst = op.succ_edges_.data() + op.succ_offsets_[e];
      for (std::uint32_t k = ix.out_offsets[h]; k < ix.out_offsets[h + 1]; ++k)
        if (ix.out_edges[k] != rev) *dst++ = ix.out_edges[k];
    }
    return op;
  }

  const OrientedEdgeIndex& index() const { return index_; }
  std::int64_t dim() const { return index_.count; }
  std::uint32_t tail(std::uint32_t e) const { return index_.tail[e]; }
  std::uint32_t head(std::uint32_t e) const { return index_.head[e]; }
  static std::uint32_t reverse(std::uint32_t e) { return OrientedEdgeIndex::reverse(e); }

  std::span<const std::uint32_t> succ(std::uint32_t e) const {
    return {succ_edges_.data() + succ_offsets_[e], succ_edges_.data() + succ_offsets_[e + 1]};
  }

  void check_dim(std::span<const double> x) const {
    if (static_cast<std::int64_t>(x.size()) != index_.count)
      throw std::invalid_argument("nb_operator: vector length does not match 2m");
  }

  // y = B x, (Bx)_e = sum over successors f of x_f.
  void matvec(std::span<const double> x, std::span<double> y) const {
    check_dim(x);
    check_dim(y);
    for (std::int64_t e = 0; e < index_.count; ++e) {
      double acc = 0.0;
      for (std::uint32_t k = succ_offsets_[e]; k < succ_offsets_[e + 1]; ++k)
        acc += x[succ_edges_[k]];
      y[e] = acc;
    }
  }

  // y = B* x via the scatter form (B*)_{fe} contributions.
  void matvec_adjoint(std::span<const double> x, std::span<double> y) const {
    check_dim(x);
    check_dim(y);
    std::fill(y.begin(), y.end(), 0.0);
    for (std::int64_t e = 0; e < index_.count; ++e) {
      const double xe = x[e];
      if (xe == 0.0) continue;
      for (std::uint32_t k = succ_offsets_[e]; k < succ_offsets_[e + 1]; ++k)
        y[succ_edges_[k]] += xe;
    }
  }

  // y = P x, the reversal involution (Px)_e = x_{e^{-1}}.
  void swap(std::span<const double> x, std::span<double> y) const {
    check_dim(x);
    check_dim(y);
    for (std::int64_t e = 0; e < index_.count; ++e) y[e] = x[e ^ 1];
  }

  std::vector<double> matvec(std::span<const double> x) const {
    std::vector<double> y(x.size());
    matvec(x, y);
    return y;
  }
  std::vector<double> matvec_adjoint(std::span<const double> x) const {
    std::vector<double> y(x.size());
    matvec_adjoint(x, y);
    return y;
  }
  std::vector<double> swap(std::span<const double> x) const {
    std::vector<double> y(x.size());
    swap(x, y);
    return y;
  }

  // Dense 0/1 matrix of B, row-major; oracle backend for small graphs.
  std::vector<double> dense_matrix(std::int64_t dense_limit = 6000) const {
    if (index_.count > dense_limit)
      throw std::length_error("nb_operator: 2m = " + std::to_string(index_.count) +
                              " exceeds dense limit " + std::to_string(dense_limit));
    const std::size_t dim = static_cast<std::size_t>(index_.count);
    std::vector<double> mat(dim * dim, 0.0);
    for (std::int64_t e = 0; e < index_.count; ++e)
      for (std::uint32_t k = succ_offsets_[e]; k < succ_offsets_[e + 1]; ++k)
        mat[static_cast<std::size_t>(e) * dim + succ_edges_[k]] = 1.0;
    return mat;
  }

 private:
  OrientedEdgeIndex index_;
  std::vector<std::uint32_t> succ_offsets_;
  std::vector<std::uint32_t> succ_edges_;
};

}  // namespace nbspec
