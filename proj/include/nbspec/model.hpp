#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "nbspec/weight_law.hpp"

namespace nbspec {

enum class BalanceMode { ExactHalves, IidUniform };

// Two-community DC-SBM parameters. An edge {u,v} is present with probability
// min(1, phi_u*phi_v*a/n) within a community and min(1, phi_u*phi_v*b/n)
// across. Immutable after validation.
struct ModelParams {
  std::int64_t n = 0;
  double a = 0.0;  // intra-cluster rate
  double b = 0.0;  // inter-cluster rate
  WeightLaw law = WeightLaw::unit();
  BalanceMode balance = BalanceMode::ExactHalves;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 2) throw std::invalid_argument("model: n must be >= 2");
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("model: a must be > 0");
    if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("model: b must be > 0");
  }
};

// Scalars of the limit theory: weight moments, the mean-progeny eigenvalues
// rho and mu2, and the detectability margin mu2^2 > rho.
struct TheoryScalars {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi3 = 0.0;
  double rho = 0.0;
  double mu2 = 0.0;
  bool detectable = false;
  // Limit factor Phi^(3)/Phi^(2) * rho/(mu2^2 - rho); defined only above
  // threshold (pole at mu2^2 = rho).
  std::optional<double> qhat_limit;

  double threshold_ratio() const { return mu2 * mu2 / rho; }
};

inline TheoryScalars theory(const ModelParams& params) {
  params.validate();
  TheoryScalars t;
  t.phi1 = params.law.moment(1);
  t.phi2 = params.law.moment(2);
  t.phi3 = params.law.moment(3);
  // Lyapunov moment inequalities; guards against a corrupted law.
  if (t.phi1 * t.phi1 > t.phi2 * (1 + 1e-12) ||
      t.phi2 * t.phi2 > t.phi1 * t.phi3 * (1 + 1e-12))
    throw std::logic_error("theory: moment inequalities violated");
  t.rho = 0.5 * (params.a + params.b) * t.phi2;
  t.mu2 = 0.5 * (params.a - params.b) * t.phi2;
  t.detectable = t.mu2 * t.mu2 > t.rho;
  if (t.detectable) t.qhat_limit = (t.phi3 / t.phi2) * t.rho / (t.mu2 * t.mu2 - t.rho);
  return t;
}

// Left eigenvector entries of the mean progeny matrix: g1 = (1,1)/sqrt(2),
// g2 = (1,-1)/sqrt(2), evaluated at a spin in {+1,-1}.
inline double spin_basis(int k, int spin) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  if (k == 1) return inv_sqrt2;
  if (k == 2) return spin > 0 ? inv_sqrt2 : -inv_sqrt2;
  throw std::invalid_argument("spin_basis: k must be 1 or 2");
}

}  // namespace nbspec
