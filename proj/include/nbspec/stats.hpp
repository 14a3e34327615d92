#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace nbspec {

struct SampleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double stderr_mean = 0.0;
};

inline SampleStats summarize(std::span<const double> xs) {
  SampleStats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) {
      const double d = x - s.mean;
      ss += d * d;
    }
    s.variance = ss / static_cast<double>(xs.size() - 1);
    s.stderr_mean = std::sqrt(s.variance / static_cast<double>(xs.size()));
  }
  return s;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty sample");
  std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
  double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  std::nth_element(xs.begin(), xs.begin() + mid - 1, xs.begin() + mid);
  return 0.5 * (hi + xs[mid - 1]);
}

// Regularized lower incomplete gamma P(a,x), series/continued-fraction form.
inline double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // series representation
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // continued fraction for Q(a,x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

// Survival function of a chi-square distribution with k degrees of freedom.
inline double chi_square_sf(double stat, double dof) {
  if (stat <= 0.0) return 1.0;
  return 1.0 - gamma_p(0.5 * dof, 0.5 * stat);
}

// Goodness-of-fit p-value of observed counts against expected probabilities.
inline double chi_square_gof(std::span<const std::int64_t> observed,
                             std::span<const double> expected_prob) {
  if (observed.size() != expected_prob.size() || observed.size() < 2)
    throw std::invalid_argument("chi_square_gof: need matching bins (>= 2)");
  std::int64_t total = 0;
  for (auto c : observed) total += c;
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double exp_count = expected_prob[i] * static_cast<double>(total);
    if (exp_count <= 0.0) throw std::invalid_argument("chi_square_gof: zero expected bin");
    const double d = static_cast<double>(observed[i]) - exp_count;
    stat += d * d / exp_count;
  }
  return chi_square_sf(stat, static_cast<double>(observed.size() - 1));
}

// Independence test for a 2x2 contingency table.
inline double chi_square_2x2(std::int64_t n00, std::int64_t n01, std::int64_t n10,
                             std::int64_t n11) {
  const double n = static_cast<double>(n00 + n01 + n10 + n11);
  if (n <= 0) return 1.0;
  const double r0 = static_cast<double>(n00 + n01), r1 = static_cast<double>(n10 + n11);
  const double c0 = static_cast<double>(n00 + n10), c1 = static_cast<double>(n01 + n11);
  if (r0 == 0 || r1 == 0 || c0 == 0 || c1 == 0) return 1.0;
  const double det = static_cast<double>(n00) * static_cast<double>(n11) -
                     static_cast<double>(n01) * static_cast<double>(n10);
  const double stat = n * det * det / (r0 * r1 * c0 * c1);
  return chi_square_sf(stat, 1.0);
}

}  // namespace nbspec
