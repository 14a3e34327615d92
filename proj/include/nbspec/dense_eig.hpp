#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "nbspec/rng.hpp"

namespace nbspec {

// Dense nonsymmetric eigenvalue machinery: Householder reduction to upper
// Hessenberg form followed by the Francis implicit double-shift QR iteration
// (real Schur form, eigenvalues only), plus LU-based inverse iteration for
// selected eigenvectors. Classic EISPACK-style algorithms, row-major storage.

class QrConvergenceError : public std::runtime_error {
 public:
  QrConvergenceError(const std::string& msg, double best_residual)
      : std::runtime_error(msg), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

namespace detail {

inline double sign_of(double magnitude, double carrier) {
  return carrier >= 0.0 ? std::fabs(magnitude) : -std::fabs(magnitude);
}

// In-place reduction to upper Hessenberg form; the lower triangle below the
// first subdiagonal is zeroed (transforms are not accumulated).
inline void hessenberg_inplace(std::vector<double>& mat, std::int64_t n) {
  auto a = [&](std::int64_t i, std::int64_t j) -> double& { return mat[i * n + j]; };
  std::vector<double> v(n), w(n);
  for (std::int64_t k = 0; k + 2 < n; ++k) {
    double xnorm2 = 0.0;
    for (std::int64_t i = k + 1; i < n; ++i) xnorm2 += a(i, k) * a(i, k);
    if (xnorm2 == 0.0) continue;
    const double xnorm = std::sqrt(xnorm2);
    const double alpha = a(k + 1, k) >= 0.0 ? -xnorm : xnorm;
    double vnorm2 = 0.0;
    for (std::int64_t i = k + 1; i < n; ++i) {
      v[i] = a(i, k);
      if (i == k + 1) v[i] -= alpha;
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;
    // left: A[k+1:, k:] -= beta v (v^T A)
    std::fill(w.begin() + k, w.end(), 0.0);
    for (std::int64_t i = k + 1; i < n; ++i) {
      const double vi = v[i];
      if (vi == 0.0) continue;
      const double* row = &a(i, k);
      for (std::int64_t j = k; j < n; ++j) w[j] += vi * row[j - k];
    }
    for (std::int64_t i = k + 1; i < n; ++i) {
      const double bvi = beta * v[i];
      double* row = &a(i, k);
      for (std::int64_t j = k; j < n; ++j) row[j - k] -= bvi * w[j];
    }
    // right: A[:, k+1:] -= beta (A v) v^T
    for (std::int64_t i = 0; i < n; ++i) {
      double* row = &a(i, 0);
      double s = 0.0;
      for (std::int64_t j = k + 1; j < n; ++j) s += row[j] * v[j];
      s *= beta;
      for (std::int64_t j = k + 1; j < n; ++j) row[j] -= s * v[j];
    }
    a(k + 1, k) = alpha;
    for (std::int64_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
}

// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
inline std::vector<std::complex<double>> hqr_eigenvalues(std::vector<double>& mat, std::int64_t n) {
  auto a = [&](std::int64_t i, std::int64_t j) -> double& { return mat[i * n + j]; };
  constexpr double EPS = std::numeric_limits<double>::epsilon();
  std::vector<double> wr(n, 0.0), wi(n, 0.0);

  double anorm = 0.0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = std::max<std::int64_t>(i - 1, 0); j < n; ++j) anorm += std::fabs(a(i, j));

  std::int64_t nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    std::int64_t its = 0;
    std::int64_t l = 0;
    double p = 0.0, q = 0.0, r = 0.0, z = 0.0, s = 0.0, x = 0.0, y = 0.0, w = 0.0;
    do {
      for (l = nn; l >= 1; --l) {
        s = std::fabs(a(l - 1, l - 1)) + std::fabs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::fabs(a(l, l - 1)) <= EPS * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      if (l < 0) l = 0;
      x = a(nn, nn);
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn] = 0.0;
        --nn;
      } else {
        y = a(nn - 1, nn - 1);
        w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          p = 0.5 * (y - x);
          q = p * p + w;
          z = std::sqrt(std::fabs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn] = z;
            wi[nn - 1] = -z;
          }
          nn -= 2;
        } else {
          if (its == 30) {
            const double denom = std::fabs(a(nn - 1, nn - 1)) + std::fabs(a(nn, nn));
            throw QrConvergenceError(
                "qr iteration failed to converge after 30 steps on a block of size " +
                    std::to_string(nn - l + 1),
                std::fabs(a(nn, nn - 1)) / (denom > 0.0 ? denom : 1.0));
          }
          if (its == 10 || its == 20) {
            t += x;
            for (std::int64_t i = 0; i <= nn; ++i) a(i, i) -= x;
            s = std::fabs(a(nn, nn - 1)) + std::fabs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          std::int64_t m = nn - 2;
          for (; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            s = y - z;
            p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::fabs(p) + std::fabs(q) + std::fabs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::fabs(a(m, m - 1)) * (std::fabs(q) + std::fabs(r));
            const double v =
                std::fabs(p) * (std::fabs(a(m - 1, m - 1)) + std::fabs(z) + std::fabs(a(m + 1, m + 1)));
            if (u <= EPS * v) break;
          }
          if (m < l) m = l;
          for (std::int64_t i = m + 2; i <= nn; ++i) {
            a(i, i - 2) = 0.0;
            if (i != m + 2) a(i, i - 3) = 0.0;
          }
          for (std::int64_t k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k + 1 != nn) r = a(k + 2, k - 1);
              x = std::fabs(p) + std::fabs(q) + std::fabs(r);
              if (x != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
              if (l != m) a(k, k - 1) = -a(k, k - 1);
            } else {
              a(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (std::int64_t j = k; j <= nn; ++j) {
              p = a(k, j) + q * a(k + 1, j);
              if (k + 1 != nn) {
                p += r * a(k + 2, j);
                a(k + 2, j) -= p * z;
              }
              a(k + 1, j) -= p * y;
              a(k, j) -= p * x;
            }
            const std::int64_t mmin = nn < k + 3 ? nn : k + 3;
            for (std::int64_t i = l; i <= mmin; ++i) {
              p = x * a(i, k) + y * a(i, k + 1);
              if (k + 1 != nn) {
                p += z * a(i, k + 2);
                a(i, k + 2) -= p * r;
              }
              a(i, k + 1) -= p * q;
              a(i, k) -= p;
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  std::vector<std::complex<double>> eigs(n);
  for (std::int64_t i = 0; i < n; ++i) eigs[i] = {wr[i], wi[i]};
  return eigs;
}

// LU factorization with partial pivoting; zero pivots are replaced by a tiny
// value so near-singular shifted systems stay solvable (inverse iteration).
template <typename T>
struct LuFactors {
  std::int64_t n = 0;
  std::vector<T> a;
  std::vector<std::int32_t> piv;

  static LuFactors factor(std::vector<T> m, std::int64_t n, double pivot_floor) {
    LuFactors lu;
    lu.n = n;
    lu.a = std::move(m);
    lu.piv.resize(n);
    auto at = [&](std::int64_t i, std::int64_t j) -> T& { return lu.a[i * n + j]; };
    for (std::int64_t k = 0; k < n; ++k) {
      std::int64_t best = k;
      double best_mag = std::abs(at(k, k));
      for (std::int64_t i = k + 1; i < n; ++i) {
        const double mag = std::abs(at(i, k));
        if (mag > best_mag) {
          best_mag = mag;
          best = i;
        }
      }
      lu.piv[k] = static_cast<std::int32_t>(best);
      if (best != k)
        for (std::int64_t j = 0; j < n; ++j) std::swap(at(k, j), at(best, j));
      if (std::abs(at(k, k)) < pivot_floor) at(k, k) = T(pivot_floor);
      const T inv_pivot = T(1.0) / at(k, k);
      for (std::int64_t i = k + 1; i < n; ++i) {
        const T f = at(i, k) * inv_pivot;
        at(i, k) = f;
        if (f == T(0.0)) continue;
        const T* src = &lu.a[k * n + k + 1];
        T* dst = &lu.a[i * n + k + 1];
        for (std::int64_t j = k + 1; j < n; ++j) dst[j - k - 1] -= f * src[j - k - 1];
      }
    }
    return lu;
  }

  void solve(std::vector<T>& b) const {
    auto at = [&](std::int64_t i, std::int64_t j) -> const T& { return a[i * n + j]; };
    for (std::int64_t k = 0; k < n; ++k) {
      std::swap(b[k], b[piv[k]]);
      for (std::int64_t i = k + 1; i < n; ++i) b[i] -= at(i, k) * b[k];
    }
    for (std::int64_t k = n - 1; k >= 0; --k) {
      b[k] /= at(k, k);
      for (std::int64_t i = 0; i < k; ++i) b[i] -= at(i, k) * b[k];
    }
  }
};

}  // namespace detail

// All eigenvalues of a dense row-major matrix (copy taken).
inline std::vector<std::complex<double>> dense_eigenvalues(std::vector<double> mat, std::int64_t n) {
  if (static_cast<std::int64_t>(mat.size()) != n * n)
    throw std::invalid_argument("dense_eigenvalues: matrix size mismatch");
  if (n == 0) return {};
  detail::hessenberg_inplace(mat, n);
  return detail::hqr_eigenvalues(mat, n);
}

struct InverseIterationResult {
  std::vector<std::complex<double>> vector;
  double residual = 0.0;  // ||A z - lambda z|| with ||z|| = 1
};

// Eigenvector for a known eigenvalue estimate via shifted inverse iteration.
inline InverseIterationResult inverse_iteration(const std::vector<double>& mat, std::int64_t n,
                                                std::complex<double> lambda, std::uint64_t seed,
                                                int iterations = 4) {
  if (n == 0) return {};
  double scale = 0.0;
  for (double v : mat) scale += std::fabs(v);
  scale = std::max(scale / static_cast<double>(n), 1.0);
  const double jitter = scale * 1e-12;
  const double pivot_floor = scale * std::numeric_limits<double>::epsilon() * 1e-2;
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto run = [&](auto zero) -> InverseIterationResult {
    using T = decltype(zero);
    std::vector<T> shifted(mat.size());
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j) {
        T v = T(mat[i * n + j]);
        if (i == j) v -= T(lambda.real() + jitter);
        shifted[i * n + j] = v;
      }
    if constexpr (std::is_same_v<T, std::complex<double>>) {
      for (std::int64_t i = 0; i < n; ++i)
        shifted[i * n + i] -= std::complex<double>(0.0, lambda.imag());
    }
    auto lu = detail::LuFactors<T>::factor(std::move(shifted), n, pivot_floor);
    std::vector<T> z(n);
    for (auto& v : z) v = T(gauss(rng));
    for (int it = 0; it < iterations; ++it) {
      lu.solve(z);
      double norm = 0.0;
      for (const auto& v : z) norm += std::norm(std::complex<double>(v));
      norm = std::sqrt(norm);
      if (norm == 0.0) throw std::runtime_error("inverse iteration: zero iterate");
      for (auto& v : z) v /= norm;
    }
    InverseIterationResult out;
    out.vector.assign(n, {0.0, 0.0});
    for (std::int64_t i = 0; i < n; ++i) out.vector[i] = std::complex<double>(z[i]);
    // residual with the unshifted matrix
    double res2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      std::complex<double> acc(0.0, 0.0);
      const double* row = &mat[i * n];
      for (std::int64_t j = 0; j < n; ++j)
        if (row[j] != 0.0) acc += row[j] * out.vector[j];
      acc -= lambda * out.vector[i];
      res2 += std::norm(acc);
    }
    out.residual = std::sqrt(res2);
    return out;
  };

  if (lambda.imag() == 0.0) return run(0.0);
  return run(std::complex<double>(0.0, 0.0));
}

}  // namespace nbspec
