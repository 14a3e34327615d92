#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "nbspec/dense_eig.hpp"
#include "nbspec/graph.hpp"
#include "nbspec/io_util.hpp"
#include "nbspec/model.hpp"
#include "nbspec/nb_operator.hpp"
#include "nbspec/rng.hpp"

namespace nbspec {

namespace vec {

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

// Normalizes in place; returns the pre-normalization norm (0 if zero vector).
inline double normalize(std::span<double> x) {
  const double n = norm(x);
  if (n > 0.0) scale(1.0 / n, x);
  return n;
}

// Removes the components of x along an orthonormal set.
inline void project_out(const std::vector<std::vector<double>>& basis, std::span<double> x) {
  for (const auto& u : basis) axpy(-dot(u, x), u, x);
}

}  // namespace vec

enum class SpectralMethod { Dense, Iterative };

// Leading spectral data of B. In dense mode `eigenvalues` carries the full
// spectrum sorted by modulus (descending); iterative mode fills the top two
// Ritz estimates and a bulk-radius growth estimate.
struct SpectrumReport {
  SpectralMethod method = SpectralMethod::Iterative;
  double lambda1 = 0.0;
  std::complex<double> lambda2{0.0, 0.0};
  bool lambda2_complex = false;
  double bulk_radius = 0.0;
  std::vector<double> xi1, xi2;  // unit eigenvector estimates in edge space
  double residual1 = 0.0, residual2 = 0.0;
  bool converged = true;
  int iterations = 0;
  std::vector<std::complex<double>> eigenvalues;  // dense mode only

  double lambda2_mod() const { return std::abs(lambda2); }
};

inline const char* to_string(SpectralMethod m) {
  return m == SpectralMethod::Dense ? "dense" : "iterative";
}

// ---- dense oracle path ------------------------------------------------------

inline SpectrumReport dense_spectrum(const NbOperator& op, std::int64_t dense_limit = 6000,
                                     std::uint64_t seed = 0x5eed) {
  const std::int64_t dim = op.dim();
  std::vector<double> mat = op.dense_matrix(dense_limit);
  SpectrumReport rep;
  rep.method = SpectralMethod::Dense;
  if (dim == 0) return rep;

  rep.eigenvalues = dense_eigenvalues(mat, dim);
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
            [](const std::complex<double>& x, const std::complex<double>& y) {
              const double mx = std::abs(x), my = std::abs(y);
              if (mx != my) return mx > my;
              if (x.real() != y.real()) return x.real() > y.real();
              return x.imag() > y.imag();
            });
  rep.lambda1 = rep.eigenvalues[0].real();
  if (dim >= 2) {
    rep.lambda2 = rep.eigenvalues[1];
    rep.lambda2_complex = rep.eigenvalues[1].imag() != 0.0;
  }
  if (dim >= 3) rep.bulk_radius = std::abs(rep.eigenvalues[2]);

  auto unit_real = [&](const InverseIterationResult& r) {
    std::vector<double> v(dim);
    for (std::int64_t i = 0; i < dim; ++i) v[i] = r.vector[i].real();
    if (vec::normalize(v) == 0.0)
      for (std::int64_t i = 0; i < dim; ++i) v[i] = r.vector[i].imag();
    vec::normalize(v);
    return v;
  };
  const auto r1 = inverse_iteration(mat, dim, {rep.lambda1, 0.0}, derive_seed(seed, 1));
  rep.xi1 = unit_real(r1);
  rep.residual1 = r1.residual;
  if (dim >= 2) {
    const auto r2 = inverse_iteration(mat, dim, rep.lambda2, derive_seed(seed, 2));
    rep.xi2 = unit_real(r2);
    rep.residual2 = r2.residual;
  }
  return rep;
}

// ---- iterative path ---------------------------------------------------------

struct IterOptions {
  int max_iters = 4000;
  double tol = 1e-9;  // residual tolerance relative to lambda1
  std::uint64_t seed = 0x5eed;
  int bulk_starts = 8;
};

namespace detail {

// Orthonormal basis spanning the given vectors (near-dependent ones dropped).
inline std::vector<std::vector<double>> orthonormal_basis(
    std::vector<std::vector<double>> vecs) {
  std::vector<std::vector<double>> basis;
  for (auto& v : vecs) {
    vec::project_out(basis, v);
    if (vec::normalize(v) > 1e-8) basis.push_back(std::move(v));
  }
  return basis;
}

struct RitzPair {
  std::complex<double> value{0.0, 0.0};
  bool complex_pair = false;
  double w0 = 1.0, w1 = 0.0;  // coordinates of the leading real Ritz vector
};

// Closed-form eigen solve of the 2x2 Rayleigh quotient [t00 t01; t10 t11].
inline RitzPair ritz_2x2(double t00, double t01, double t10, double t11) {
  RitzPair out;
  const double tr = t00 + t11;
  const double det = t00 * t11 - t01 * t10;
  const double disc = tr * tr - 4.0 * det;
  if (disc < 0.0) {
    out.complex_pair = true;
    out.value = {0.5 * tr, 0.5 * std::sqrt(-disc)};
    return out;
  }
  const double root = std::sqrt(disc);
  const double l1 = 0.5 * (tr + root), l2 = 0.5 * (tr - root);
  const double lead = std::fabs(l1) >= std::fabs(l2) ? l1 : l2;
  out.value = {lead, 0.0};
  // eigenvector of the better-conditioned row
  if (std::fabs(t01) >= std::fabs(t10)) {
    out.w0 = t01;
    out.w1 = lead - t00;
  } else {
    out.w0 = lead - t11;
    out.w1 = t10;
  }
  const double nw = std::hypot(out.w0, out.w1);
  if (nw > 0.0) {
    out.w0 /= nw;
    out.w1 /= nw;
  } else {
    out.w0 = 1.0;
    out.w1 = 0.0;
  }
  return out;
}

}  // namespace detail

// Power iteration for the Perron pair, then a deflated two-dimensional block
// iteration for the second eigenvalue (kept orthogonal to span{xi1, swap xi1},
// which contains B's left leading eigenvector), then a growth estimate of the
// bulk radius after deflating both leading pairs.
inline SpectrumReport top_two_iterative(const NbOperator& op, const IterOptions& opts = {}) {
  const std::int64_t dim = op.dim();
  if (dim < 2) throw std::invalid_argument("top_two_iterative: graph has no edges");
  SpectrumReport rep;
  rep.method = SpectralMethod::Iterative;
  Rng rng = make_rng(derive_seed(opts.seed, 0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  std::vector<double> y(dim);

  // --- leading pair
  bool converged1 = false;
  double lambda1 = 0.0;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    op.matvec(x, y);
    lambda1 = vec::dot(x, y);
    std::vector<double> r = y;
    vec::axpy(-lambda1, x, r);
    const double scale = std::max(std::fabs(lambda1), 1e-30);
    if (vec::norm(r) <= opts.tol * scale) {
      rep.residual1 = vec::norm(r);
      converged1 = true;
      ++it;
      break;
    }
    if (vec::normalize(y) == 0.0) {  // nilpotent operator: B x = 0
      lambda1 = 0.0;
      rep.residual1 = 0.0;
      converged1 = true;
      ++it;
      break;
    }
    x = y;
  }
  if (!converged1) {
    op.matvec(x, y);
    std::vector<double> r = y;
    vec::axpy(-lambda1, x, r);
    rep.residual1 = vec::norm(r);
  }
  rep.lambda1 = lambda1;
  rep.xi1 = x;
  rep.iterations = it;
  rep.converged = converged1;

  const double res_scale = std::max(std::fabs(lambda1), 1.0);
  const auto defl1 = detail::orthonormal_basis({rep.xi1, op.swap(rep.xi1)});

  // --- second pair via a deflated 2-block (handles a complex pair below
  // threshold and degenerate lambda1 = lambda2 without special casing)
  std::vector<double> x1(dim), x2(dim);
  for (auto& v : x1) v = gauss(rng);
  for (auto& v : x2) v = gauss(rng);
  bool converged2 = false;
  detail::RitzPair ritz;
  std::vector<double> q(dim, 0.0);
  if (dim > static_cast<std::int64_t>(2 * defl1.size())) {
    auto renorm_block = [&]() -> bool {
      vec::project_out(defl1, x1);
      if (vec::normalize(x1) < 1e-12) return false;
      vec::project_out(defl1, x2);
      vec::axpy(-vec::dot(x1, x2), x1, x2);
      if (vec::normalize(x2) < 1e-12) {
        for (auto& v : x2) v = gauss(rng);
        vec::project_out(defl1, x2);
        vec::axpy(-vec::dot(x1, x2), x1, x2);
        if (vec::normalize(x2) < 1e-12) return false;
      }
      return true;
    };
    if (renorm_block()) {
      std::vector<double> y1(dim), y2(dim);
      for (int it2 = 0; it2 < opts.max_iters; ++it2) {
        op.matvec(x1, y1);
        op.matvec(x2, y2);
        vec::project_out(defl1, y1);
        vec::project_out(defl1, y2);
        const double t00 = vec::dot(x1, y1), t01 = vec::dot(x1, y2);
        const double t10 = vec::dot(x2, y1), t11 = vec::dot(x2, y2);
        ritz = detail::ritz_2x2(t00, t01, t10, t11);
        if (!ritz.complex_pair) {
          for (std::int64_t i = 0; i < dim; ++i) q[i] = ritz.w0 * x1[i] + ritz.w1 * x2[i];
          std::vector<double> bq(dim);
          for (std::int64_t i = 0; i < dim; ++i) bq[i] = ritz.w0 * y1[i] + ritz.w1 * y2[i];
          vec::axpy(-ritz.value.real(), q, bq);
          rep.residual2 = vec::norm(bq);
        } else {
          // Frobenius residual of the invariant-plane equation B X = X T
          double rr = 0.0;
          for (std::int64_t i = 0; i < dim; ++i) {
            const double d1 = y1[i] - (t00 * x1[i] + t10 * x2[i]);
            const double d2 = y2[i] - (t01 * x1[i] + t11 * x2[i]);
            rr += d1 * d1 + d2 * d2;
          }
          rep.residual2 = std::sqrt(rr);
          for (std::int64_t i = 0; i < dim; ++i) q[i] = x1[i];
        }
        if (rep.residual2 <= opts.tol * res_scale) {
          converged2 = true;
          break;
        }
        x1 = y1;
        x2 = y2;
        if (!renorm_block()) break;
      }
    }
    rep.lambda2 = ritz.value;
    rep.lambda2_complex = ritz.complex_pair;
    vec::normalize(q);
    rep.xi2 = q;
  } else {
    rep.xi2.assign(dim, 0.0);
    converged2 = true;
  }
  rep.converged = rep.converged && converged2;

  // --- bulk radius: median growth rate of deflated random vectors
  auto defl2_vecs = defl1;
  if (!rep.xi2.empty() && vec::norm(rep.xi2) > 0.0) {
    defl2_vecs.push_back(rep.xi2);
    defl2_vecs.push_back(op.swap(rep.xi2));
    if (rep.lambda2_complex) {  // deflate the whole invariant plane
      defl2_vecs.push_back(x2);
      defl2_vecs.push_back(op.swap(x2));
    }
  }
  const auto defl2 = detail::orthonormal_basis(std::move(defl2_vecs));
  const int steps = 2 * static_cast<int>(std::ceil(std::log2(std::max<std::int64_t>(dim, 4))));
  std::vector<double> rates;
  std::vector<double> z(dim);
  for (int s = 0; s < opts.bulk_starts; ++s) {
    for (auto& v : z) v = gauss(rng);
    vec::project_out(defl2, z);
    if (vec::normalize(z) == 0.0) continue;
    double log_sum = 0.0;
    bool dead = false;
    for (int step = 0; step < steps; ++step) {
      op.matvec(z, y);
      vec::project_out(defl2, y);
      const double r = vec::normalize(y);
      if (r == 0.0) {
        dead = true;
        break;
      }
      log_sum += std::log(r);
      std::swap(z, y);
    }
    rates.push_back(dead ? 0.0 : std::exp(log_sum / steps));
  }
  if (!rates.empty()) {
    std::sort(rates.begin(), rates.end());
    rep.bulk_radius = rates[rates.size() / 2];
  }
  return rep;
}

// ---- candidate vectors ------------------------------------------------------

// zeta_k = B^l B*^l chi_k-swapped, renormalized every step; chi_k(e) is the
// spin-basis value at the head times the head weight.
struct CandidateVectors {
  std::vector<double> zeta1, zeta2;
  std::vector<double> chi1, chi2;
  int ell = 0;
  double log_norm1 = 0.0, log_norm2 = 0.0;  // log ||B^l B*^l chi-check||
};

inline CandidateVectors candidate_vectors(const ColoredGraph& g, const NbOperator& op, int ell) {
  if (ell < 0) throw std::invalid_argument("candidate_vectors: ell must be >= 0");
  const std::int64_t dim = op.dim();
  if (dim == 0) throw std::invalid_argument("candidate_vectors: graph has no edges");
  CandidateVectors out;
  out.ell = ell;
  auto build_chi = [&](int k) {
    std::vector<double> chi(dim);
    for (std::int64_t e = 0; e < dim; ++e) {
      const std::uint32_t h = op.head(static_cast<std::uint32_t>(e));
      chi[e] = spin_basis(k, g.spins[h]) * g.weights[h];
    }
    return chi;
  };
  out.chi1 = build_chi(1);
  out.chi2 = build_chi(2);
  auto power = [&](const std::vector<double>& chi, double& log_norm) {
    std::vector<double> v = op.swap(chi);
    double scale = vec::normalize(v);
    if (scale == 0.0) throw std::runtime_error("candidate_vectors: chi vector is zero");
    log_norm = std::log(scale);
    std::vector<double> w(dim);
    for (int step = 0; step < 2 * ell; ++step) {
      if (step < ell)
        op.matvec_adjoint(v, w);
      else
        op.matvec(v, w);
      const double r = vec::normalize(w);
      if (r == 0.0)
        throw std::runtime_error("candidate_vectors: power of B annihilated the candidate "
                                 "(degenerate input graph)");
      log_norm += std::log(r);
      std::swap(v, w);
    }
    return v;
  };
  out.zeta1 = power(out.chi1, out.log_norm1);
  out.zeta2 = power(out.chi2, out.log_norm2);
  return out;
}

// ---- verdicts and scalar helpers --------------------------------------------

enum class RiemannVerdict { Satisfied, Violated, Inconclusive };

struct RiemannReport {
  RiemannVerdict verdict = RiemannVerdict::Inconclusive;
  double bound = 0.0;  // sqrt(lambda1) + margin
  std::vector<std::complex<double>> violators;
};

inline const char* to_string(RiemannVerdict v) {
  switch (v) {
    case RiemannVerdict::Satisfied: return "satisfied";
    case RiemannVerdict::Violated: return "violated";
    default: return "inconclusive";
  }
}

// Quasi-Ramanujan check: no eigenvalue beyond index 1 may exceed
// sqrt(lambda1) + margin. Needs the full spectrum (dense mode) to certify
// "satisfied"; the iterative report can only refute or stay inconclusive.
inline RiemannReport riemann_check(const SpectrumReport& report, double margin) {
  RiemannReport out;
  out.bound = std::sqrt(std::max(report.lambda1, 0.0)) + margin;
  const double slack = 1e-9 * std::max(out.bound, 1.0);
  if (report.method == SpectralMethod::Dense) {
    for (std::size_t i = 1; i < report.eigenvalues.size(); ++i)
      if (std::abs(report.eigenvalues[i]) > out.bound + slack)
        out.violators.push_back(report.eigenvalues[i]);
    out.verdict = out.violators.empty() ? RiemannVerdict::Satisfied : RiemannVerdict::Violated;
  } else {
    if (report.lambda2_mod() > out.bound + slack) {
      out.violators.push_back(report.lambda2);
      out.verdict = RiemannVerdict::Violated;
    } else {
      out.verdict = RiemannVerdict::Inconclusive;
    }
  }
  return out;
}

inline double alignment(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("alignment: length mismatch");
  const double nu = vec::norm(u), nv = vec::norm(v);
  if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("alignment: zero vector");
  return std::fabs(vec::dot(u, v)) / (nu * nv);
}

struct PracticalEll {
  int value = 1;
  double rho_hat = 0.0;  // mean forward branching, plug-in for rho
  bool subcritical = false;
};

// l = max(1, ceil(c * ln n / ln rho_hat)) with rho_hat estimated from the
// degree sequence. The paper-prescribed constant is impractically small at
// desk scale; c = 0.4 is the working default and stays configurable.
inline PracticalEll practical_ell(const ColoredGraph& g, double c = 0.4) {
  if (g.m() == 0) throw std::invalid_argument("practical_ell: graph has no edges");
  std::vector<std::int64_t> deg(g.n, 0);
  for (const auto& [u, v] : g.edges) {
    ++deg[u];
    ++deg[v];
  }
  double num = 0.0, den = 0.0;
  for (std::int64_t v = 0; v < g.n; ++v) {
    num += static_cast<double>(deg[v]) * static_cast<double>(deg[v] - 1);
    den += static_cast<double>(deg[v]);
  }
  PracticalEll out;
  out.rho_hat = den > 0.0 ? num / den : 0.0;
  if (out.rho_hat <= 1.0) {
    out.subcritical = true;
    out.value = 1;
    return out;
  }
  const double raw = c * std::log(static_cast<double>(g.n)) / std::log(out.rho_hat);
  out.value = std::max(1, static_cast<int>(std::ceil(raw)));
  return out;
}

// Dense-mode spectrum dump: one line per eigenvalue.
inline void write_spectrum_csv(const SpectrumReport& report, std::ostream& out) {
  out << "index,re,im,modulus\n";
  for (std::size_t i = 0; i < report.eigenvalues.size(); ++i) {
    const auto& z = report.eigenvalues[i];
    out << i << ',' << fmt_metric(z.real()) << ',' << fmt_metric(z.imag()) << ','
        << fmt_metric(std::abs(z)) << '\n';
  }
}

}  // namespace nbspec
