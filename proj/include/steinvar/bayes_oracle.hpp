#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "steinvar/core_stats.hpp"

namespace steinvar {

namespace oracle_detail {

/// Shared evaluation counter for one oracle computation.
struct QuadBudget {
  std::int64_t used = 0;
  std::int64_t limit = 2'000'000'000;
  void charge(std::int64_t k) {
    used += k;
    if (used > limit)
      throw QuadratureBudgetExceededError("oracle quadrature exceeded its evaluation budget");
  }
};

template <typename F>
double simpson_recurse(F& f, double a, double b, double fa, double fm, double fb, double whole,
                       double abs_tol, int depth, QuadBudget& budget) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  budget.charge(2);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * abs_tol)
    return left + right + delta / 15.0;
  return simpson_recurse(f, a, m, fa, flm, fm, left, abs_tol / 2, depth - 1, budget) +
         simpson_recurse(f, m, b, fm, frm, fb, right, abs_tol / 2, depth - 1, budget);
}

/// Adaptive Simpson on [a,b] with a relative tolerance anchored to a coarse
/// composite pre-pass.
template <typename F>
double adaptive_simpson(F f, double a, double b, double rel_tol, QuadBudget& budget) {
  constexpr int kCoarse = 32;
  const double h = (b - a) / kCoarse;
  budget.charge(kCoarse + 1);
  double coarse = 0;
  double prev = f(a);
  for (int k = 0; k < kCoarse; ++k) {
    const double mid = f(a + (k + 0.5) * h);
    const double next = f(a + (k + 1) * h);
    budget.charge(1);
    coarse += h / 6.0 * (prev + 4.0 * mid + next);
    prev = next;
  }
  const double scale = std::max(std::abs(coarse), 1e-300);
  const double fa = f(a);
  const double fm = f(0.5 * (a + b));
  const double fb = f(b);
  budget.charge(3);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(f, a, b, fa, fm, fb, whole, rel_tol * scale, 60, budget);
}

/// \int_0^inf f(s) ds through s = scale * u/(1-u); refinement near u = 1
/// covers the tail. f must decay faster than s^-2.
template <typename F>
double integrate_zero_inf(F f, double rel_tol, QuadBudget& budget, double scale = 1.0) {
  auto mapped = [&f, scale](double u) -> double {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double om = 1.0 - u;
    const double s = scale * u / om;
    const double value = f(s) * scale / (om * om);
    return std::isfinite(value) ? value : 0.0;
  };
  return adaptive_simpson(mapped, 0.0, 1.0, rel_tol, budget);
}

/// Two-sided integral folded around a center point.
template <typename F>
double integrate_real_line(F f, double center, double rel_tol, QuadBudget& budget,
                           double scale = 1.0) {
  return integrate_zero_inf([&f, center](double s) { return f(center + s) + f(center - s); },
                            rel_tol, budget, scale);
}

}  // namespace oracle_detail

/// Spherically symmetric sampling density in dimension n: the error vector
/// has density f(eps'eps) with E[eps] = 0 and Var[eps] = I, equivalently
/// (pi^{n/2}/Gamma(n/2)) \int s^{n/2-1} f(s) ds = 1   (unit mass)
/// (pi^{n/2}/Gamma(n/2)) \int s^{n/2}   f(s) ds = n   (unit variance).
class SamplingDensity {
 public:
  enum class Kind { Gaussian, StudentT, UserRadial };

  static SamplingDensity gaussian(int n) {
    SamplingDensity d(Kind::Gaussian, n);
    d.log_const_ = -0.5 * n * std::log(2.0 * 3.14159265358979323846);
    return d;
  }

  /// Multivariate-t with nu > 2 degrees of freedom, scaled to unit component
  /// variance: f(s) ~ (1 + s/(nu-2))^{-(nu+n)/2}.
  static SamplingDensity student_t(int n, double nu) {
    if (!(nu > 2)) throw ParameterRangeViolationError("student_t density needs nu > 2");
    SamplingDensity d(Kind::StudentT, n);
    d.nu_ = nu;
    d.log_const_ = std::lgamma(0.5 * (nu + n)) - std::lgamma(0.5 * nu) -
                   0.5 * n * std::log((nu - 2.0) * 3.14159265358979323846);
    return d;
  }

  /// User radial density; construction enforces both normalization
  /// identities to 1e-8.
  static SamplingDensity user_radial(int n, std::function<double(double)> f);

  /// Skips validation; exists so misnormalized densities can be fed to
  /// verify_normalization on purpose.
  static SamplingDensity user_radial_unchecked(int n, std::function<double(double)> f) {
    SamplingDensity d(Kind::UserRadial, n);
    d.radial_ = std::move(f);
    return d;
  }

  double operator()(double s) const {
    switch (kind_) {
      case Kind::Gaussian: return std::exp(log_const_ - 0.5 * s);
      case Kind::StudentT:
        return std::exp(log_const_ - 0.5 * (nu_ + n_) * std::log1p(s / (nu_ - 2.0)));
      case Kind::UserRadial: return radial_(s);
    }
    return 0;
  }

  int dim() const { return n_; }
  Kind kind() const { return kind_; }

  std::string name() const {
    switch (kind_) {
      case Kind::Gaussian: return "gaussian";
      case Kind::StudentT: return "t:" + std::to_string(nu_);
      case Kind::UserRadial: return "user";
    }
    return "unknown";
  }

 private:
  SamplingDensity(Kind kind, int n) : kind_(kind), n_(n) {
    if (n < 2) throw ParameterRangeViolationError("sampling density needs dimension >= 2");
  }

  Kind kind_;
  int n_;
  double nu_ = 0;
  double log_const_ = 0;
  std::function<double(double)> radial_;
};

/// Residuals of the two radial normalization identities and of the proof
/// constant (M0_f / M1_f) * (M1_G / M0_G) that collapses to 1.
struct NormalizationReport {
  double mass_residual = 0;           // |M0 - 1|
  double second_moment_residual = 0;  // |M1/n - 1|
  double proof_constant_residual = 0;
  bool pass(double tol) const {
    return mass_residual < tol && second_moment_residual < tol && proof_constant_residual < tol;
  }
};

inline NormalizationReport verify_normalization(const SamplingDensity& density) {
  using namespace oracle_detail;
  const int n = density.dim();
  QuadBudget budget;
  auto moment = [&](double extra) {
    return std::exp(0.5 * n * std::log(3.14159265358979323846) - std::lgamma(0.5 * n)) *
           integrate_zero_inf(
               [&](double s) { return std::pow(s, 0.5 * n - 1.0 + extra) * density(s); }, 1e-11,
               budget, static_cast<double>(n));
  };
  const double m0 = moment(0.0);
  const double m1 = moment(1.0);
  NormalizationReport report;
  report.mass_residual = std::abs(m0 - 1.0);
  report.second_moment_residual = std::abs(m1 / n - 1.0);
  // Gaussian counterpart of M1/M0 is exactly n, so the proof constant is
  // (M0_f/M1_f) * n.
  report.proof_constant_residual = std::abs(m0 / m1 * n - 1.0);
  return report;
}

inline SamplingDensity SamplingDensity::user_radial(int n, std::function<double(double)> f) {
  SamplingDensity d = user_radial_unchecked(n, std::move(f));
  const NormalizationReport report = verify_normalization(d);
  if (report.mass_residual > 1e-8 || report.second_moment_residual > 1e-8)
    throw DensityNormalizationError(
        "radial density violates the unit-mass/unit-variance identities (residuals " +
        std::to_string(report.mass_residual) + ", " +
        std::to_string(report.second_moment_residual) + ")");
  return d;
}

/// Prior on (alpha, beta, sigma^2); the sigma^2 factor is always 1/sigma^2.
struct PriorSpec {
  enum class Kind { SeparablePower, GenericSeparable };

  Kind kind = Kind::SeparablePower;
  double a = 2;  // SeparablePower: pi(alpha, beta) = (beta' X'X beta)^{-(p-a)/2}
  std::function<double(double, const Eigen::VectorXd&)> pi;

  static PriorSpec separable_power(double a) {
    PriorSpec p;
    p.kind = Kind::SeparablePower;
    p.a = a;
    return p;
  }

  static PriorSpec generic_separable(std::function<double(double, const Eigen::VectorXd&)> pi) {
    PriorSpec p;
    p.kind = Kind::GenericSeparable;
    p.pi = std::move(pi);
    return p;
  }
};

enum class MarginalMethod { Auto, GIntegral, Nested };

struct OracleOptions {
  MarginalMethod method = MarginalMethod::Auto;
  double rel_tol = 1e-9;
  std::int64_t budget_limit = 2'000'000'000;
};

namespace oracle_detail {

struct DataSummary {
  int n, p;
  double ybar;
  double total_ss, rss, r_squared;
  Eigen::MatrixXd xtx;
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd w;  // (X'X)^{-1/2} X' v; |w|^2 = fitted SS
  double log_det_xtx;
};

inline DataSummary summarize(const RegressionData& data) {
  DataSummary s;
  s.n = data.n();
  s.p = data.p();
  s.ybar = data.y.mean();
  const SufficientStats stats = compute_stats(data);
  s.total_ss = stats.total_ss;
  s.rss = stats.rss;
  s.r_squared = stats.r_squared;
  s.xtx = data.x.transpose() * data.x;
  const Eigen::VectorXd v = data.y.array() - s.ybar;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.xtx);
  const Eigen::VectorXd ev = eig.eigenvalues();
  s.log_det_xtx = ev.array().log().sum();
  const Eigen::MatrixXd inv_sqrt =
      eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
      eig.eigenvectors().transpose();
  s.w = inv_sqrt * (data.x.transpose() * v);
  s.beta_hat = s.xtx.ldlt().solve(data.x.transpose() * v);
  return s;
}

/// Inner sigma^2 marginal \int sigma^{-n} f(r2/sigma^2) (sigma^2)^{-i-1} dsigma^2.
inline double sigma_marginal(const SamplingDensity& density, double r2, int i, double rel_tol,
                             QuadBudget& budget) {
  const int n = density.dim();
  const double peak = r2 / (n + 2.0 * i + 2.0);
  return integrate_zero_inf(
      [&](double s) {
        return std::pow(s, -0.5 * n - i - 1.0) * density(r2 / s);
      },
      rel_tol, budget, peak);
}

/// Appendix-style one-dimensional g-representation of the power-prior
/// marginal under the Gaussian density, with all constants kept (in logs):
/// m_i = A 2^{i-a/2} sqrt(n) Gamma((n-a-1+2i)/2) pi^{-(n-1)/2}
///       |v|^{-(n-a-1+2i)} J_i,  A = 2^{a/2} pi^{p/2} / (Gamma((p-a)/2) |X'X|^{1/2}).
inline double log_marginal_g_integral(const DataSummary& s, double a, int i, double rel_tol,
                                      QuadBudget& budget) {
  const double n = s.n, p = s.p;
  const double expo_top = 0.5 * (n - p - a - 1.0 + 2.0 * i);
  const double expo_bot = 0.5 * (n - a - 1.0 + 2.0 * i);
  const double one_minus_r2 = 1.0 - s.r_squared;
  // Substitution g = w^{2/a} removes the g^{a/2-1} endpoint singularity.
  const double q = 2.0 / a;
  const double g_scale = (one_minus_r2 > 0 && s.r_squared > 0) ? 1.0 / one_minus_r2 : 1.0;
  const double w_scale = std::pow(g_scale, a / 2.0);
  const double integral = integrate_zero_inf(
      [&](double w) {
        const double g = std::pow(w, q);
        return q * std::pow(1.0 + g, expo_top) / std::pow(g * one_minus_r2 + 1.0, expo_bot);
      },
      rel_tol, budget, w_scale);
  const double pi_const = 3.14159265358979323846;
  const double log_a_const =
      0.5 * a * std::log(2.0) + 0.5 * p * std::log(pi_const) - std::lgamma(0.5 * (p - a)) -
      0.5 * s.log_det_xtx;
  return log_a_const + (i - 0.5 * a) * std::log(2.0) + 0.5 * std::log(n) +
         std::lgamma(expo_bot) - 0.5 * (n - 1.0) * std::log(pi_const) -
         (n - a - 1.0 + 2.0 * i) * 0.5 * std::log(s.total_ss) + std::log(integral);
}

/// Direct tensor quadrature over (alpha, beta, sigma^2) for a generic
/// separable prior, p <= 2.
inline double log_marginal_nested_generic(const DataSummary& s, const RegressionData& data,
                                          const PriorSpec& prior,
                                          const SamplingDensity& density, int i, double rel_tol,
                                          QuadBudget& budget) {
  const int n = s.n;
  const int p = s.p;
  const Eigen::VectorXd v = data.y.array() - s.ybar;
  const double sigma_hat = std::sqrt(s.rss / (n - p - 1));
  const double alpha_scale = std::max(1.0, sigma_hat);
  Eigen::VectorXd beta_scale(p);
  for (int j = 0; j < p; ++j)
    beta_scale[j] = std::max(1.0, 3.0 * sigma_hat / std::sqrt(s.xtx(j, j)));

  auto residual_ss = [&](const Eigen::VectorXd& beta) {
    return (v - data.x * beta).squaredNorm();
  };
  auto inner = [&](double alpha, const Eigen::VectorXd& beta) {
    const double r2 = n * (alpha - s.ybar) * (alpha - s.ybar) + residual_ss(beta);
    return sigma_marginal(density, r2, i, rel_tol, budget) * prior.pi(alpha, beta);
  };

  double value;
  if (p == 1) {
    value = integrate_real_line(
        [&](double alpha) {
          return integrate_real_line(
              [&](double b0) {
                Eigen::VectorXd beta(1);
                beta << b0;
                return inner(alpha, beta);
              },
              s.beta_hat[0], rel_tol, budget, beta_scale[0]);
        },
        s.ybar, rel_tol, budget, alpha_scale);
  } else if (p == 2) {
    value = integrate_real_line(
        [&](double alpha) {
          return integrate_real_line(
              [&](double b0) {
                return integrate_real_line(
                    [&](double b1) {
                      Eigen::VectorXd beta(2);
                      beta << b0, b1;
                      return inner(alpha, beta);
                    },
                    s.beta_hat[1], rel_tol, budget, beta_scale[1]);
              },
              s.beta_hat[0], rel_tol, budget, beta_scale[0]);
        },
        s.ybar, rel_tol, budget, alpha_scale);
  } else {
    throw ParameterRangeViolationError("nested oracle quadrature supports p <= 2 only");
  }
  return std::log(value);
}

/// Direct quadrature for the power prior at p = 2 in polar coordinates of
/// theta = (X'X)^{1/2} beta, where the prior is rho^{-(p-a)} and the polar
/// Jacobian leaves a smooth rho^{a-1}.
inline double log_marginal_nested_power(const DataSummary& s, const PriorSpec& prior,
                                        const SamplingDensity& density, int i, double rel_tol,
                                        QuadBudget& budget) {
  if (s.p != 2)
    throw ParameterRangeViolationError("nested power-prior route is implemented for p = 2");
  const int n = s.n;
  const double a = prior.a;
  const double sigma_hat = std::sqrt(s.rss / (n - s.p - 1));
  const double rho_scale = s.w.norm() + sigma_hat;
  const double two_pi = 2.0 * 3.14159265358979323846;

  auto ring = [&](double alpha, double rho) {
    const double base =
        n * (alpha - s.ybar) * (alpha - s.ybar) + s.rss + rho * rho + s.w.squaredNorm();
    const double cross = 2.0 * rho;
    return adaptive_simpson(
        [&](double omega) {
          const double dist2 =
              base - cross * (s.w[0] * std::cos(omega) + s.w[1] * std::sin(omega));
          return sigma_marginal(density, dist2, i, rel_tol, budget);
        },
        0.0, two_pi, rel_tol, budget);
  };
  const double value = integrate_real_line(
      [&](double alpha) {
        return integrate_zero_inf(
            [&](double rho) { return std::pow(rho, a - 1.0) * ring(alpha, rho); }, rel_tol,
            budget, rho_scale);
      },
      s.ybar, rel_tol, budget, std::max(1.0, sigma_hat));
  return std::log(value) - 0.5 * s.log_det_xtx;
}

inline double log_marginal(const RegressionData& data, const PriorSpec& prior,
                           const SamplingDensity& density, int i, const OracleOptions& options,
                           QuadBudget& budget) {
  if (density.dim() != data.n())
    throw ParameterRangeViolationError("density dimension must equal the sample size");
  if (i != 0 && i != 1) throw ParameterRangeViolationError("marginal index must be 0 or 1");
  const DataSummary s = summarize(data);

  MarginalMethod method = options.method;
  if (method == MarginalMethod::Auto)
    method = prior.kind == PriorSpec::Kind::SeparablePower ? MarginalMethod::GIntegral
                                                           : MarginalMethod::Nested;
  if (prior.kind == PriorSpec::Kind::SeparablePower && !(prior.a > 0 && prior.a < s.p))
    throw BadShrinkageOrderError("power prior requires 0 < a < p");

  if (method == MarginalMethod::GIntegral) {
    if (prior.kind != PriorSpec::Kind::SeparablePower)
      throw ParameterRangeViolationError("g-integral route applies to the power prior only");
    if (density.kind() != SamplingDensity::Kind::Gaussian)
      throw ParameterRangeViolationError(
          "g-integral route is derived under the Gaussian density; use the nested route");
    return log_marginal_g_integral(s, prior.a, i, options.rel_tol, budget);
  }
  if (prior.kind == PriorSpec::Kind::SeparablePower)
    return log_marginal_nested_power(s, prior, density, i, options.rel_tol, budget);
  if (s.n > 8 || s.p > 2)
    throw ParameterRangeViolationError("generic-prior oracle requires n <= 8 and p <= 2");
  return log_marginal_nested_generic(s, data, prior, density, i, options.rel_tol, budget);
}

}  // namespace oracle_detail

/// Marginal density integral m_i = \iint m^f_i(y | alpha, beta)
/// pi(alpha, beta) dalpha dbeta, evaluated numerically. Only the i = 0 over
/// i = 1 ratio is consumed downstream.
inline double marginal_mi(const RegressionData& data, const PriorSpec& prior,
                          const SamplingDensity& density, int i,
                          const OracleOptions& options = {}) {
  oracle_detail::QuadBudget budget;
  budget.limit = options.budget_limit;
  return std::exp(oracle_detail::log_marginal(data, prior, density, i, options, budget));
}

/// Generalized Bayes estimate {E[1/sigma^2 | y]}^{-1} = m_0 / m_1 from first
/// principles.
inline double gb_estimate_oracle(const RegressionData& data, const PriorSpec& prior,
                                 const SamplingDensity& density,
                                 const OracleOptions& options = {}) {
  oracle_detail::QuadBudget budget;
  budget.limit = options.budget_limit;
  const double log_m0 = oracle_detail::log_marginal(data, prior, density, 0, options, budget);
  const double log_m1 = oracle_detail::log_marginal(data, prior, density, 1, options, budget);
  return std::exp(log_m0 - log_m1);
}

/// Residual of the scale-mixture identity behind the power prior:
/// (beta' X'X beta)^{-(p-a)/2} equals its inverse-gamma mixture over g.
inline double mixture_identity_residual(double quad_form, double sigma_sq, double a, int p) {
  using namespace oracle_detail;
  if (!(quad_form > 0) || !(sigma_sq > 0) || !(a > 0) || !(a < p))
    throw ParameterRangeViolationError("mixture identity requires q, sigma^2 > 0, 0 < a < p");
  QuadBudget budget;
  const double pi_const = 3.14159265358979323846;
  const double q = 2.0 / a;  // substitution g = w^{2/a}
  const double g_peak = quad_form / (sigma_sq * (p + 2.0 - a));
  const double integral = integrate_zero_inf(
      [&](double w) {
        const double g = std::pow(w, q);
        return q * std::pow(2.0 * pi_const * sigma_sq * g, -0.5 * p) *
               std::exp(-quad_form / (2.0 * sigma_sq * g));
      },
      1e-11, budget, std::pow(g_peak, a / 2.0));
  const double value = std::exp(0.5 * a * std::log(2.0) + 0.5 * p * std::log(pi_const) -
                                std::lgamma(0.5 * (p - a)) + 0.5 * a * std::log(sigma_sq)) *
                       integral;
  const double target = std::pow(quad_form, -0.5 * (p - a));
  return std::abs(value / target - 1.0);
}

/// Central finite-difference Laplacian of f at x with step h.
template <typename F>
double fd_laplacian(F f, const Eigen::VectorXd& x, double h) {
  const double fx = f(x);
  double acc = 0;
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    acc += f(xp) - 2.0 * fx + f(xm);
  }
  return acc / (h * h);
}

}  // namespace steinvar
