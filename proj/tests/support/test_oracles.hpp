#pragma once

// Test-only reference implementations, independent of the library's
// evaluation paths: extended-precision quadrature, special functions for
// closed-form risk values, and distribution-test helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace testsupport {

// ---------------------------------------------------------------------------
// Extended-precision adaptive composite Simpson.

template <typename F>
long double simpson_recurse(F& f, long double a, long double b, long double fa, long double fm,
                            long double fb, long double whole, long double tol, int depth) {
  const long double m = (a + b) / 2;
  const long double flm = f((a + m) / 2);
  const long double frm = f((m + b) / 2);
  const long double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const long double right = (b - m) / 6 * (fm + 4 * frm + fb);
  const long double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15;
  return simpson_recurse(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

template <typename F>
long double adaptive_simpson(F f, long double a, long double b, long double tol) {
  const long double fa = f(a);
  const long double fm = f((a + b) / 2);
  const long double fb = f(b);
  const long double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 64);
}

/// Reference value of \int_0^1 t^{b-1}(1-t)^{c-1}(1-zt)^m dt by adaptive
/// Simpson on the split [0,1/2] + [1/2,1] after the smoothstep substitution
/// t = u^2(3-2u), which absorbs the endpoint singularities for b, c >= 1/2.
inline long double beta_integral_reference(long double b, long double c, long double m,
                                           long double z, long double tol = 1e-16L) {
  auto g = [=](long double u) -> long double {
    const long double t = u * u * (3 - 2 * u);
    const long double jac = 6 * u * (1 - u);
    if (t <= 0 || t >= 1) return 0.0L;
    return std::pow(t, b - 1) * std::pow(1 - t, c - 1) * std::pow(1 - z * t, m) * jac;
  };
  return adaptive_simpson(g, 0.0L, 0.5L, tol) + adaptive_simpson(g, 0.5L, 1.0L, tol);
}

// ---------------------------------------------------------------------------
// Special functions for closed-form risk values.

/// Digamma by the recurrence psi(x) = psi(x+1) - 1/x into the asymptotic
/// region.
inline double digamma(double x) {
  double acc = 0;
  while (x < 8) {
    acc -= 1.0 / x;
    x += 1;
  }
  const double inv = 1.0 / x, inv2 = inv * inv;
  return acc + std::log(x) - 0.5 * inv -
         inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 / 240)));
}

/// Closed-form Stein-loss risk of the unbiased estimator under normality:
/// E[chi2_k/k - log(chi2_k/k) - 1] = log k - psi(k/2) - log 2.
inline double unbiased_risk_gaussian(int k) {
  return std::log(static_cast<double>(k)) - digamma(0.5 * k) - std::log(2.0);
}

/// Regularized lower incomplete gamma P(a, x); series and continued fraction.
inline double gamma_p(double a, double x) {
  if (x <= 0) return 0;
  if (x < a + 1) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 10000; ++k) {
      term *= x / (a + k);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Lentz continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
  for (int k = 1; k < 10000; ++k) {
    const double an = -k * (k - a);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1) < 1e-16) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline double chi_square_cdf(double x, double dof) { return gamma_p(0.5 * dof, 0.5 * x); }

/// Noncentral chi-square CDF through the Poisson mixture
/// sum_j Pois(j; lambda/2) P(chi2_{k+2j} <= x).
inline double noncentral_chi_square_cdf(double x, double dof, double lambda) {
  if (x <= 0) return 0;
  const double half = 0.5 * lambda;
  double weight = std::exp(-half);
  double acc = 0;
  for (int j = 0; j < 10000; ++j) {
    acc += weight * chi_square_cdf(x, dof + 2.0 * j);
    if (j > half && weight < 1e-15) break;
    weight *= half / (j + 1);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Distribution-test helpers.

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2| (sorts copies).
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

// KS rejection threshold multiplier at alpha = 0.001:
// c = sqrt(-ln(alpha/2)/2).
inline constexpr double kKsCrit001 = 1.9494746035204051;

// chi^2 upper 0.001 quantile at 49 degrees of freedom (50-bin GOF test).
inline constexpr double kChi2Crit49_001 = 85.35056460859305;

/// Chi-square goodness-of-fit statistic of `draws` against a CDF, with
/// `bins` equal-probability cells whose edges come from bisection on the CDF.
inline double gof_statistic(const std::vector<double>& draws,
                            const std::function<double(double)>& cdf, int bins) {
  std::vector<double> edges(bins - 1);
  for (int k = 1; k < bins; ++k) {
    const double target = static_cast<double>(k) / bins;
    double lo = 0, hi = 1;
    while (cdf(hi) < target) hi *= 2;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < target ? lo : hi) = mid;
    }
    edges[k - 1] = 0.5 * (lo + hi);
  }
  std::vector<std::int64_t> counts(bins, 0);
  for (double x : draws) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    ++counts[static_cast<std::size_t>(it - edges.begin())];
  }
  const double expected = static_cast<double>(draws.size()) / bins;
  double stat = 0;
  for (auto cnt : counts) {
    const double diff = static_cast<double>(cnt) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

}  // namespace testsupport
