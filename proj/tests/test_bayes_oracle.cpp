#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "steinvar/bayes_oracle.hpp"
#include "steinvar/estimators.hpp"

using namespace steinvar;

namespace {

RegressionData make_dataset(int n, int p, unsigned seed, double noise = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = normal(gen);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = 0.5 + noise * normal(gen);
    for (int j = 0; j < p; ++j) y[i] += 0.6 * x(i, j);
  }
  return RegressionData(std::move(y), std::move(x));
}

PriorSpec gaussian_bump_prior() {
  return PriorSpec::generic_separable([](double alpha, const Eigen::VectorXd& beta) {
    return std::exp(-0.5 * beta.squaredNorm() - alpha * alpha / 50.0);
  });
}

}  // namespace

TEST_SUITE("bayes_oracle") {

TEST_CASE("normalization identities") {
  SUBCASE("Gaussian is exact") {
    const auto report = verify_normalization(SamplingDensity::gaussian(6));
    CHECK(report.mass_residual < 1e-10);
    CHECK(report.second_moment_residual < 1e-10);
    CHECK(report.proof_constant_residual < 1e-10);
  }
  SUBCASE("unit-variance Student t") {
    for (double nu : {5.0, 9.0}) {
      const auto report = verify_normalization(SamplingDensity::student_t(6, nu));
      CHECK(report.mass_residual < 1e-8);
      CHECK(report.second_moment_residual < 1e-8);
      CHECK(report.proof_constant_residual < 1e-8);
    }
  }
  SUBCASE("misnormalized radial density is reported and rejected") {
    const int n = 6;
    auto doubled = [n](double s) {
      return 2.0 * std::exp(-0.5 * n * std::log(2.0 * 3.14159265358979323846) - 0.5 * s);
    };
    const auto report =
        verify_normalization(SamplingDensity::user_radial_unchecked(n, doubled));
    CHECK(report.mass_residual == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(SamplingDensity::user_radial(n, doubled), DensityNormalizationError);
    // The correctly normalized version constructs fine.
    auto ok = [n](double s) {
      return std::exp(-0.5 * n * std::log(2.0 * 3.14159265358979323846) - 0.5 * s);
    };
    CHECK_NOTHROW(SamplingDensity::user_radial(n, ok));
  }
}

TEST_CASE("scale-mixture identity behind the power prior") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(0.3, 3.0);
  for (int rep = 0; rep < 10; ++rep) {
    const int p = 3 + static_cast<int>(gen() % 4);  // 3..6
    const double a = 0.3 + (p - 0.6) * (unif(gen) / 3.0);
    const double q = unif(gen);
    const double sigma_sq = unif(gen);
    CHECK(mixture_identity_residual(q, sigma_sq, std::min(a, p - 0.2), p) < 1e-8);
  }
}

TEST_CASE("Laplacian of the power prior in theta coordinates") {
  // ||theta||^{-(p-a)} is superharmonic for 2 < a < p and harmonic at a = 2.
  const int p = 5;
  Eigen::VectorXd theta(p);
  theta << 0.6, -0.4, 0.5, 0.3, -0.2;
  theta /= theta.norm();  // ||theta|| = 1
  auto power = [p](double a) {
    return [p, a](const Eigen::VectorXd& t) { return std::pow(t.squaredNorm(), -0.5 * (p - a)); };
  };
  const double lap3 = fd_laplacian(power(3.0), theta, 1e-3);
  CHECK(lap3 < 0);
  CHECK(lap3 == doctest::Approx((p - 3.0) * (2.0 - 3.0)).epsilon(1e-3));
  const double lap2 = fd_laplacian(power(2.0), theta, 1e-3);
  CHECK(std::abs(lap2) < 1e-4);
}

TEST_CASE("power-prior oracle reproduces the closed-form estimator") {
  const auto data = make_dataset(10, 4, 101);
  const auto stats = compute_stats(data);
  const auto density = SamplingDensity::gaussian(10);
  for (double a : {2.0}) {
    const double oracle = gb_estimate_oracle(data, PriorSpec::separable_power(a), density);
    const double closed = delta_gb(a, stats).value;
    CHECK(oracle == doctest::Approx(closed).epsilon(1e-6));
  }
}

TEST_CASE("sign flip of the centered response leaves the oracle unchanged") {
  const auto data = make_dataset(6, 1, 102);
  const double ybar = data.y.mean();
  Eigen::VectorXd flipped = -data.y.array() + 2.0 * ybar;
  const RegressionData mirrored(flipped, data.x);
  OracleOptions options;
  options.rel_tol = 1e-8;
  const auto density = SamplingDensity::gaussian(6);
  const auto prior = gaussian_bump_prior();
  const double lhs = gb_estimate_oracle(data, prior, density, options);
  const double rhs = gb_estimate_oracle(mirrored, prior, density, options);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("distribution independence at desk scale: Gaussian vs t(5)") {
  const auto data = make_dataset(6, 1, 103);
  const auto prior = gaussian_bump_prior();
  OracleOptions options;
  options.rel_tol = 1e-8;
  const double gauss =
      gb_estimate_oracle(data, prior, SamplingDensity::gaussian(6), options);
  const double student =
      gb_estimate_oracle(data, prior, SamplingDensity::student_t(6, 5.0), options);
  CHECK(student == doctest::Approx(gauss).epsilon(1e-5));
}

TEST_CASE("g-integral and direct nested quadrature agree for the power prior") {
  const auto data = make_dataset(7, 2, 104);
  const auto density = SamplingDensity::gaussian(7);
  const auto prior = PriorSpec::separable_power(1.0);
  OracleOptions fast;
  fast.method = MarginalMethod::GIntegral;
  OracleOptions nested;
  nested.method = MarginalMethod::Nested;
  nested.rel_tol = 1e-8;
  const double via_g = gb_estimate_oracle(data, prior, density, fast);
  const double via_nested = gb_estimate_oracle(data, prior, density, nested);
  CHECK(via_nested == doctest::Approx(via_g).epsilon(1e-6));
  // The individual marginals match too (the constants, not just the ratio).
  const double m0_g = marginal_mi(data, prior, density, 0, fast);
  const double m0_n = marginal_mi(data, prior, density, 1, nested);
  const double m1_g = marginal_mi(data, prior, density, 1, fast);
  CHECK(m0_n == doctest::Approx(m1_g).epsilon(1e-5));
  CHECK(m0_g / m1_g == doctest::Approx(via_g).epsilon(1e-9));
}

TEST_CASE("method and shape validation") {
  const auto data = make_dataset(10, 4, 105);
  const auto density = SamplingDensity::gaussian(10);
  // Generic priors need tiny problems.
  CHECK_THROWS_AS(gb_estimate_oracle(data, gaussian_bump_prior(), density),
                  ParameterRangeViolationError);
  // The g-integral route is Gaussian-only.
  OracleOptions g_route;
  g_route.method = MarginalMethod::GIntegral;
  CHECK_THROWS_AS(gb_estimate_oracle(make_dataset(6, 1, 106), PriorSpec::separable_power(0.5),
                                     SamplingDensity::student_t(6, 5.0), g_route),
                  ParameterRangeViolationError);
  // Power prior needs 0 < a < p.
  CHECK_THROWS_AS(gb_estimate_oracle(data, PriorSpec::separable_power(4.0), density),
                  BadShrinkageOrderError);
  // Density dimension must match the sample size.
  CHECK_THROWS_AS(gb_estimate_oracle(data, PriorSpec::separable_power(2.0),
                                     SamplingDensity::gaussian(9)),
                  ParameterRangeViolationError);
}

TEST_CASE("exhausted budgets raise instead of returning garbage") {
  const auto data = make_dataset(6, 1, 107);
  OracleOptions options;
  options.budget_limit = 1000;
  CHECK_THROWS_AS(
      gb_estimate_oracle(data, gaussian_bump_prior(), SamplingDensity::gaussian(6), options),
      QuadratureBudgetExceededError);
}

}
