#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <tuple>
#include <vector>

#include "steinvar/common.hpp"

namespace steinvar {

/// Parameters of the weighted beta-type integral
///   I(b, c, m, z) = \int_0^1 t^{b-1} (1-t)^{c-1} (1 - z t)^m dt.
/// Integrability needs b > 0, c > 0, and c + m > 0 when z = 1.
struct BetaIntegralSpec {
  double b;
  double c;
  double m;
  double z;
};

template <typename Scalar>
Scalar beta_fn(Scalar b, Scalar c) {
  return std::exp(std::lgamma(b) + std::lgamma(c) - std::lgamma(b + c));
}

namespace detail {

/// x^m where 2m is (numerically) a small integer: sqrt + binary powering.
/// Falls back to std::pow otherwise. x must be > 0.
inline double pow_half_integer(double x, double m) {
  const double two_m = 2.0 * m;
  const double rounded = std::nearbyint(two_m);
  if (std::abs(two_m - rounded) > 1e-12 || std::abs(rounded) > 64.0)
    return std::pow(x, m);
  long k = static_cast<long>(rounded);
  const bool invert = k < 0;
  if (invert) k = -k;
  double acc = (k & 1) ? std::sqrt(x) : 1.0;
  double base = x;
  for (long e = k >> 1; e > 0; e >>= 1) {
    if (e & 1) acc *= base;
    base *= base;
  }
  return invert ? 1.0 / acc : acc;
}

/// Implicit-shift QL for a symmetric tridiagonal matrix, tracking only the
/// first row of the eigenvector matrix (Golub-Welsch). diag d[0..n-1],
/// off-diagonal e[k] couples d[k] and d[k+1]; e[n-1] is scratch. On return
/// d holds eigenvalues (unsorted) and z the first eigenvector components.
template <typename Scalar>
void ql_implicit_shift(std::vector<Scalar>& d, std::vector<Scalar>& e,
                       std::vector<Scalar>& z) {
  const int n = static_cast<int>(d.size());
  if (n <= 1) return;
  e[n - 1] = Scalar(0);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const Scalar dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 60)
          throw NoConvergenceError("QL iteration limit while computing quadrature nodes");
        Scalar g = (d[l + 1] - d[l]) / (2 * e[l]);
        Scalar r = std::hypot(g, Scalar(1));
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        Scalar s = 1, c = 1, p = 0;
        int i;
        for (i = m - 1; i >= l; --i) {
          Scalar f = s * e[i];
          const Scalar bb = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == Scalar(0)) {
            d[i + 1] -= p;
            e[m] = Scalar(0);
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2 * c * bb;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - bb;
          f = z[i + 1];
          z[i + 1] = s * z[i] + c * f;
          z[i] = c * z[i] - s * f;
        }
        if (r == Scalar(0) && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = Scalar(0);
      }
    } while (m != l);
  }
}

/// Gauss-Jacobi rule mapped to [0,1] for the weight t^{b-1}(1-t)^{c-1},
/// normalized so that sum(w) = 1. With this normalization
///   I(b,c,m,z) ~= B(b,c) * sum_i w[i] * (1 - z t[i])^m,
/// exact for m = 0 at every node count.
template <typename Scalar>
struct JacobiRule {
  std::vector<Scalar> t;
  std::vector<Scalar> w;
};

template <typename Scalar>
JacobiRule<Scalar> build_jacobi_rule(Scalar b, Scalar c, int npts) {
  // Jacobi weight on [-1,1] is (1-x)^alpha (1+x)^beta with alpha=c-1, beta=b-1.
  const Scalar alpha = c - 1;
  const Scalar beta = b - 1;
  const Scalar ab = alpha + beta;
  std::vector<Scalar> d(npts), e(npts, Scalar(0)), z(npts, Scalar(0));
  d[0] = (beta - alpha) / (ab + 2);
  for (int k = 1; k < npts; ++k)
    d[k] = (beta * beta - alpha * alpha) / ((2 * k + ab) * (2 * k + ab + 2));
  if (npts > 1) {
    e[0] = std::sqrt(4 * (alpha + 1) * (beta + 1) / ((ab + 2) * (ab + 2) * (ab + 3)));
    for (int k = 2; k < npts; ++k) {
      const Scalar q = 2 * k + ab;
      e[k - 1] =
          std::sqrt(4 * k * (k + alpha) * (k + beta) * (k + ab) / (q * q * (q + 1) * (q - 1)));
    }
  }
  z[0] = Scalar(1);
  ql_implicit_shift(d, e, z);

  std::vector<int> order(npts);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return d[i] < d[j]; });

  JacobiRule<Scalar> rule;
  rule.t.resize(npts);
  rule.w.resize(npts);
  for (int i = 0; i < npts; ++i) {
    rule.t[i] = (1 + d[order[i]]) / 2;
    rule.w[i] = z[order[i]] * z[order[i]];
  }
  return rule;
}

/// Process-wide cache of double-precision rules keyed by (b, c, node count).
/// Lookups after first build are shared-lock only.
inline const JacobiRule<double>& cached_jacobi_rule(double b, double c, int npts) {
  using Key = std::tuple<double, double, int>;
  static std::map<Key, std::unique_ptr<JacobiRule<double>>> cache;
  static std::shared_mutex mutex;
  const Key key{b, c, npts};
  {
    std::shared_lock lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
  }
  auto rule = std::make_unique<JacobiRule<double>>(build_jacobi_rule<double>(b, c, npts));
  std::unique_lock lock(mutex);
  auto [it, inserted] = cache.try_emplace(key, std::move(rule));
  return *it->second;
}

template <typename Scalar>
Scalar eval_jacobi(const JacobiRule<Scalar>& rule, Scalar m, Scalar z) {
  Scalar acc = 0;
  const std::size_t n = rule.t.size();
  if constexpr (std::is_same_v<Scalar, double>) {
    for (std::size_t i = 0; i < n; ++i)
      acc += rule.w[i] * pow_half_integer(1 - z * rule.t[i], m);
  } else {
    for (std::size_t i = 0; i < n; ++i) acc += rule.w[i] * std::pow(1 - z * rule.t[i], m);
  }
  return acc;
}

inline void validate_beta_spec(const BetaIntegralSpec& s) {
  if (!(s.b > 0) || !(s.c > 0))
    throw NotIntegrableError("beta integral requires b > 0 and c > 0");
  if (!(s.z >= 0) || !(s.z <= 1))
    throw NotIntegrableError("beta integral requires z in [0, 1]");
  if (s.z == 1 && !(s.c + s.m > 0))
    throw NotIntegrableError("beta integral at z = 1 requires c + m > 0");
}

/// Expansion around z = 1: I(1) = B(b, c+m), plus the first-order term
/// -m B(b+1, c+m-1) when it is integrable.
inline double beta_integral_near_one(const BetaIntegralSpec& s) {
  double value = beta_fn(s.b, s.c + s.m);
  if (s.c + s.m > 1) value += (1 - s.z) * s.m * beta_fn(s.b + 1, s.c + s.m - 1);
  return value;
}

}  // namespace detail

struct BetaIntegralResult {
  double value = 0;
  int nodes = 0;                    // node count of the converged rule (0 = analytic route)
  bool endpoint_expansion = false;  // true when served by the z->1 expansion
};

inline constexpr int kBetaIntegralMaxNodes = 1 << 14;

/// I(b,c,m,z) by Gauss-Jacobi quadrature whose weight absorbs the endpoint
/// singularities t^{b-1}(1-t)^{c-1}. Node count doubles from 16 until two
/// successive estimates agree to 1e-13 relative. z = 1 uses the identity
/// I = B(b, c+m); z > 1 - 1e-8 uses that identity plus first-order
/// continuity (flagged). If the ladder hits 2^14 nodes the near-one
/// expansion is used for z > 1 - 1e-6 (flagged, error <= ~(1-z)^min(c+m,2));
/// otherwise NoConvergence.
inline BetaIntegralResult beta_integral_full(const BetaIntegralSpec& spec) {
  detail::validate_beta_spec(spec);
  if (spec.z == 1) return {beta_fn(spec.b, spec.c + spec.m), 0, false};
  if (spec.z > 1 - 1e-8) return {detail::beta_integral_near_one(spec), 0, true};

  const double scale = beta_fn(spec.b, spec.c);
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int npts = 16; npts <= kBetaIntegralMaxNodes; npts *= 2) {
    const auto& rule = detail::cached_jacobi_rule(spec.b, spec.c, npts);
    const double cur = detail::eval_jacobi(rule, spec.m, spec.z);
    if (std::isfinite(prev) && std::abs(cur - prev) <= 1e-13 * std::abs(cur))
      return {scale * cur, npts, false};
    prev = cur;
  }
  if (spec.z > 1 - 1e-6)
    return {detail::beta_integral_near_one(spec), kBetaIntegralMaxNodes, true};
  throw NoConvergenceError("beta integral did not converge by 2^14 Gauss-Jacobi nodes");
}

inline double beta_integral(const BetaIntegralSpec& spec) {
  return beta_integral_full(spec).value;
}

/// Independent evaluation through the Euler/Gauss series
///   I = B(b, b+c) 2F1(-m, b; b+c; z),
/// term-wise expansion of (1-zt)^m. Requires z < 1.
inline double beta_integral_series(const BetaIntegralSpec& spec) {
  if (!(spec.b > 0) || !(spec.c > 0))
    throw NotIntegrableError("beta integral requires b > 0 and c > 0");
  if (!(spec.z >= 0) || !(spec.z < 1))
    throw NotIntegrableError("series evaluation requires z in [0, 1)");
  double sum = 1;
  double term = 1;
  constexpr long kMaxTerms = 1000000;
  for (long k = 0; k < kMaxTerms; ++k) {
    term *= spec.z * (static_cast<double>(k) - spec.m) * (spec.b + static_cast<double>(k)) /
            ((spec.b + spec.c + static_cast<double>(k)) * (static_cast<double>(k) + 1));
    sum += term;
    if (std::abs(term) <= 1e-16 * std::abs(sum)) return beta_fn(spec.b, spec.c) * sum;
  }
  throw SeriesDivergedError("hypergeometric series exceeded 10^6 terms (z too close to 1)");
}

}  // namespace steinvar
