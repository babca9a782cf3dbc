#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>

#include "steinvar/core_stats.hpp"
#include "steinvar/quadrature.hpp"

namespace steinvar {

enum class EstimatorKind {
  Unbiased,
  SteinTruncated,
  BrewsterZidek,
  GeneralizedBayes,  // parameter a, valid for 0 < a < p
  SimpleBayesStar,   // valid for (n-1)/2 < p < n-1
  CustomPhi,         // user-supplied monotone phi(R^2), phi-form by construction
  CustomDelta,       // arbitrary map from stats; not phi-form
};

/// Tagged choice of variance estimator. The built-in kinds cover the
/// unbiased, Stein-truncated, Brewster-Zidek, generalized-Bayes and
/// simple-Bayes families; the two custom kinds exist so the risk harness can
/// probe arbitrary shrinkage rules.
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::Unbiased;
  double a = 0;  // GeneralizedBayes only
  std::string label;
  std::function<double(double)> custom_phi;
  std::function<double(const SufficientStats&)> custom_delta;

  static EstimatorSpec unbiased() { return {EstimatorKind::Unbiased}; }
  static EstimatorSpec stein() { return {EstimatorKind::SteinTruncated}; }
  static EstimatorSpec brewster_zidek() { return {EstimatorKind::BrewsterZidek}; }
  static EstimatorSpec generalized_bayes(double a) {
    EstimatorSpec s{EstimatorKind::GeneralizedBayes};
    s.a = a;
    return s;
  }
  static EstimatorSpec simple_bayes_star() { return {EstimatorKind::SimpleBayesStar}; }
  static EstimatorSpec custom_phi_form(std::string label, std::function<double(double)> phi) {
    EstimatorSpec s{EstimatorKind::CustomPhi};
    s.label = std::move(label);
    s.custom_phi = std::move(phi);
    return s;
  }
  static EstimatorSpec custom(std::string label,
                              std::function<double(const SufficientStats&)> delta) {
    EstimatorSpec s{EstimatorKind::CustomDelta};
    s.label = std::move(label);
    s.custom_delta = std::move(delta);
    return s;
  }

  bool phi_form() const { return kind != EstimatorKind::CustomDelta; }

  std::string name() const {
    switch (kind) {
      case EstimatorKind::Unbiased: return "u";
      case EstimatorKind::SteinTruncated: return "stein";
      case EstimatorKind::BrewsterZidek: return "bz";
      case EstimatorKind::GeneralizedBayes: {
        std::ostringstream os;
        os << "gb:a=" << a;
        return os.str();
      }
      case EstimatorKind::SimpleBayesStar: return "sbstar";
      case EstimatorKind::CustomPhi:
      case EstimatorKind::CustomDelta: return label.empty() ? "custom" : label;
    }
    return "unknown";
  }
};

/// A variance estimate together with the shrinkage factor that produced it:
/// value = phi * RSS / (n - p - 1) for every phi-form estimator.
struct VarianceEstimate {
  double value = 0;
  double phi = 1;
  EstimatorSpec estimator;
};

/// Stein's (entropy) loss d/s - log(d/s) - 1; zero iff the estimate is exact.
inline double stein_loss(double delta, double sigma_sq) {
  if (!(delta > 0) || !(sigma_sq > 0))
    throw NonPositiveArgumentError("stein_loss requires positive arguments");
  const double ratio = delta / sigma_sq;
  return ratio - std::log(ratio) - 1.0;
}

namespace detail {

inline void require_positive_rss(const SufficientStats& s) {
  if (!(s.rss > 0)) throw ZeroResidualError("estimator undefined at RSS = 0");
}

inline void require_shape(const SufficientStats& s) {
  if (s.n <= s.p + 1)
    throw ParameterRangeViolationError("estimators require n > p + 1");
}

}  // namespace detail

/// Brewster-Zidek shrinkage factor
///   phi(R^2) = 1 - [2 (1-R^2)^{(n-p-1)/2} / (n-1)] / I(p/2, 1, (n-p-1)/2, R^2),
/// smooth and increasing from 1 - p/(n-1) at R^2 = 0 to 1 at R^2 = 1.
inline double phi_bz(double r_squared, int n, int p) {
  if (p < 1 || n <= p + 1)
    throw ParameterRangeViolationError("phi_bz requires p >= 1 and n > p + 1");
  if (!(r_squared >= 0) || !(r_squared <= 1))
    throw ParameterRangeViolationError("phi_bz requires R^2 in [0, 1]");
  const double half_dof = 0.5 * (n - p - 1);
  const double numer = 2.0 * std::pow(1.0 - r_squared, half_dof) / (n - 1);
  if (numer == 0) return 1.0;
  const double integral = beta_integral({0.5 * p, 1.0, half_dof, r_squared});
  return 1.0 - numer / integral;
}

/// Generalized-Bayes shrinkage factor for the power prior with exponent a,
///   phi_a(R^2) = (n-p-1)/(n-a-1) * I(b, c, m0, R^2) / I(b, c, m1, R^2)
/// with b = (p-a)/2, c = a/2, m_i = (n-p-a-1+2i)/2. Valid for 0 < a < p.
inline double phi_gb(double a, double r_squared, int n, int p) {
  if (!(a > 0) || !(a < p))
    throw BadShrinkageOrderError("phi_gb requires 0 < a < p");
  if (n <= p + 1) throw ParameterRangeViolationError("phi_gb requires n > p + 1");
  if (!(r_squared >= 0) || !(r_squared <= 1))
    throw ParameterRangeViolationError("phi_gb requires R^2 in [0, 1]");
  const double b = 0.5 * (p - a);
  const double c = 0.5 * a;
  const double m0 = 0.5 * (n - p - a - 1);
  const double num = beta_integral({b, c, m0, r_squared});
  const double den = beta_integral({b, c, m0 + 1.0, r_squared});
  return (static_cast<double>(n - p - 1) / (n - a - 1)) * num / den;
}

/// Unbiased (best equivariant) estimator RSS / (n - p - 1).
inline VarianceEstimate delta_u(const SufficientStats& stats) {
  detail::require_shape(stats);
  detail::require_positive_rss(stats);
  return {stats.rss / (stats.n - stats.p - 1), 1.0, EstimatorSpec::unbiased()};
}

/// Stein's truncated estimator min(delta_U, total_ss / (n - 1)).
inline VarianceEstimate delta_stein(const SufficientStats& stats) {
  detail::require_shape(stats);
  detail::require_positive_rss(stats);
  const double unbiased = stats.rss / (stats.n - stats.p - 1);
  const double pooled = stats.total_ss / (stats.n - 1);
  const double value = std::min(unbiased, pooled);
  return {value, value * (stats.n - stats.p - 1) / stats.rss, EstimatorSpec::stein()};
}

inline VarianceEstimate delta_bz(const SufficientStats& stats) {
  detail::require_shape(stats);
  detail::require_positive_rss(stats);
  const double phi = phi_bz(stats.r_squared, stats.n, stats.p);
  return {phi * stats.rss / (stats.n - stats.p - 1), phi, EstimatorSpec::brewster_zidek()};
}

inline VarianceEstimate delta_gb(double a, const SufficientStats& stats) {
  detail::require_shape(stats);
  detail::require_positive_rss(stats);
  const double phi = phi_gb(a, stats.r_squared, stats.n, stats.p);
  return {phi * stats.rss / (stats.n - stats.p - 1), phi, EstimatorSpec::generalized_bayes(a)};
}

/// Simple-Bayes estimator [1 + (2p-n+1)/(n-p-1) (1-R^2)]^{-1} RSS/(n-p-1);
/// generalized Bayes for spherically symmetric errors when (n-1)/2 < p < n-1.
inline VarianceEstimate delta_sb_star(const SufficientStats& stats) {
  detail::require_shape(stats);
  const int n = stats.n;
  const int p = stats.p;
  if (!(2 * p > n - 1) || !(p < n - 1))
    throw ParameterRangeViolationError(
        "sbstar requires (n-1)/2 < p < n-1 (got n = " + std::to_string(n) +
        ", p = " + std::to_string(p) + ")");
  detail::require_positive_rss(stats);
  const double coeff = static_cast<double>(2 * p - n + 1) / (n - p - 1);
  const double phi = 1.0 / (1.0 + coeff * (1.0 - stats.r_squared));
  return {phi * stats.rss / (n - p - 1), phi, EstimatorSpec::simple_bayes_star()};
}

/// Shrinkage factor of a phi-form spec at given (R^2, n, p).
inline double phi_value(const EstimatorSpec& spec, double r_squared, int n, int p) {
  switch (spec.kind) {
    case EstimatorKind::Unbiased: return 1.0;
    case EstimatorKind::SteinTruncated: {
      if (r_squared >= 1) return 1.0;
      return std::min(1.0, static_cast<double>(n - p - 1) / ((n - 1) * (1.0 - r_squared)));
    }
    case EstimatorKind::BrewsterZidek: return phi_bz(r_squared, n, p);
    case EstimatorKind::GeneralizedBayes: return phi_gb(spec.a, r_squared, n, p);
    case EstimatorKind::SimpleBayesStar: {
      if (!(2 * p > n - 1) || !(p < n - 1))
        throw ParameterRangeViolationError("sbstar requires (n-1)/2 < p < n-1");
      const double coeff = static_cast<double>(2 * p - n + 1) / (n - p - 1);
      return 1.0 / (1.0 + coeff * (1.0 - r_squared));
    }
    case EstimatorKind::CustomPhi: return spec.custom_phi(r_squared);
    case EstimatorKind::CustomDelta:
      throw ChallengerNotPhiFormError("estimator '" + spec.name() + "' is not phi-form");
  }
  throw Error("unreachable estimator kind");
}

inline VarianceEstimate evaluate(const EstimatorSpec& spec, const SufficientStats& stats) {
  switch (spec.kind) {
    case EstimatorKind::Unbiased: return delta_u(stats);
    case EstimatorKind::SteinTruncated: return delta_stein(stats);
    case EstimatorKind::BrewsterZidek: return delta_bz(stats);
    case EstimatorKind::GeneralizedBayes: return delta_gb(spec.a, stats);
    case EstimatorKind::SimpleBayesStar: return delta_sb_star(stats);
    case EstimatorKind::CustomPhi: {
      detail::require_shape(stats);
      detail::require_positive_rss(stats);
      const double phi = spec.custom_phi(stats.r_squared);
      return {phi * stats.rss / (stats.n - stats.p - 1), phi, spec};
    }
    case EstimatorKind::CustomDelta: {
      const double value = spec.custom_delta(stats);
      return {value, value * (stats.n - stats.p - 1) / stats.rss, spec};
    }
  }
  throw Error("unreachable estimator kind");
}

}  // namespace steinvar
