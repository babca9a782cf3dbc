#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "steinvar/estimators.hpp"
#include "steinvar/moments.hpp"
#include "steinvar/sampling.hpp"
#include "support/test_oracles.hpp"

using namespace steinvar;

namespace {

Eigen::MatrixXd fixed_design(int n, int p, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = normal(gen);
  return center_design<double>(x);
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("mixing law construction rules") {
  CHECK_THROWS_AS(MixingLaw::inverse_gamma_t(2.0), ParameterRangeViolationError);
  CHECK_THROWS_AS(MixingLaw::two_point(0.5, 2.0, 0.5), ParameterRangeViolationError);
  const auto law = MixingLaw::two_point(0.5, 2.0, 2.0 / 3.0);
  CHECK(law.w * law.v1 + (1 - law.w) * law.v2 == doctest::Approx(1.0));
  const auto balanced = MixingLaw::two_point_balanced(0.5, 2.0);
  CHECK(balanced.w == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("tau^2 draws have unit mean") {
  SUBCASE("point mass is identically 1") {
    Rng rng(1);
    const auto law = MixingLaw::pointmass();
    for (int i = 0; i < 100; ++i) CHECK(law.sample_tau_sq(rng) == 1.0);
  }
  SUBCASE("inverse-gamma mixing, nu = 5") {
    Rng rng(2);
    const auto law = MixingLaw::inverse_gamma_t(5.0);
    RunningMoments m;
    for (int i = 0; i < 1000000; ++i) m.add(law.sample_tau_sq(rng));
    CHECK(std::abs(m.mean - 1.0) < 3.0 * m.std_error());
  }
  SUBCASE("two-point mixing") {
    Rng rng(3);
    const auto law = MixingLaw::two_point(0.5, 2.0, 2.0 / 3.0);
    RunningMoments m;
    for (int i = 0; i < 200000; ++i) {
      const double t = law.sample_tau_sq(rng);
      CHECK((t == 0.5 || t == 2.0));
      m.add(t);
    }
    CHECK(std::abs(m.mean - 1.0) < 3.0 * m.std_error());
  }
}

TEST_CASE("direct sufficient-statistic sampler moments") {
  SUBCASE("R^2 is Beta(p/2, (n-p-1)/2) at xi = 0") {
    SimConfig config{10, 4, 0.0, 1.0, MixingLaw::pointmass(), 11, 1};
    RunningMoments m;
    for (std::int64_t rep = 0; rep < 1000000; ++rep) {
      Rng rng(substream_seed(config.seed, rep));
      m.add(sample_stats_direct(config, rng).r_squared);
    }
    CHECK(std::abs(m.mean - 4.0 / 9.0) < 3.0 * m.std_error());
  }
  SUBCASE("unbiasedness of RSS/(n-p-1) under heavy tails") {
    SimConfig config{10, 4, 4.0, 2.5, MixingLaw::inverse_gamma_t(5.0), 12, 1};
    RunningMoments m;
    for (std::int64_t rep = 0; rep < 1000000; ++rep) {
      Rng rng(substream_seed(config.seed, rep));
      m.add(sample_stats_direct(config, rng).rss / 5.0);
    }
    CHECK(std::abs(m.mean - 2.5) < 3.0 * m.std_error());
  }
  SUBCASE("E[total_ss] = sigma^2 (xi + n - 1)") {
    SimConfig config{10, 4, 0.0, 1.0, MixingLaw::pointmass(), 13, 1};
    RunningMoments m;
    for (std::int64_t rep = 0; rep < 500000; ++rep) {
      Rng rng(substream_seed(config.seed, rep));
      m.add(sample_stats_direct(config, rng).total_ss);
    }
    CHECK(std::abs(m.mean - 9.0) < 3.0 * m.std_error());
  }
}

TEST_CASE("unbiased estimator is unbiased by simulation") {
  SimConfig config{10, 4, 1.0, 1.0, MixingLaw::pointmass(), 14, 1};
  RunningMoments m;
  for (std::int64_t rep = 0; rep < 1000000; ++rep) {
    Rng rng(substream_seed(config.seed, rep));
    m.add(delta_u(sample_stats_direct(config, rng)).value);
  }
  CHECK(std::abs(m.mean - 1.0) < 3.0 * m.std_error());
}

TEST_CASE("noncentral chi-square matches the Poisson-mixture law") {
  Rng rng(15);
  std::vector<double> draws(100000);
  for (auto& d : draws) d = rng.noncentral_chi_square(4.0, 4.0);
  const double stat = testsupport::gof_statistic(
      draws, [](double x) { return testsupport::noncentral_chi_square_cdf(x, 4.0, 4.0); }, 50);
  CHECK(stat < testsupport::kChi2Crit49_001);
}

TEST_CASE("central chi-square sampler also passes goodness of fit") {
  Rng rng(16);
  std::vector<double> draws(100000);
  for (auto& d : draws) d = rng.chi_square(5.0);
  const double stat = testsupport::gof_statistic(
      draws, [](double x) { return testsupport::chi_square_cdf(x, 5.0); }, 50);
  CHECK(stat < testsupport::kChi2Crit49_001);
}

TEST_CASE("multivariate-t marginals are heavy tailed: kurtosis > 3 at nu = 7") {
  const auto law = MixingLaw::inverse_gamma_t(7.0);
  constexpr int kBatches = 100;
  constexpr int kPerBatch = 20000;
  RunningMoments batch_kurt;
  Rng rng(17);
  for (int b = 0; b < kBatches; ++b) {
    RunningMoments m2;
    double m4 = 0;
    std::vector<double> xs(kPerBatch);
    for (auto& x : xs) {
      x = std::sqrt(law.sample_tau_sq(rng)) * rng.normal();
      m2.add(x);
    }
    const double var = m2.m2 / kPerBatch;
    for (double x : xs) m4 += std::pow(x - m2.mean, 4);
    m4 /= kPerBatch;
    batch_kurt.add(m4 / (var * var));
  }
  CHECK(batch_kurt.mean - 3.0 * batch_kurt.std_error() > 3.0);
}

TEST_CASE("full-model sampler") {
  const auto x = fixed_design(10, 4, 99);
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(4);
  SUBCASE("noiseless data recovers R^2 = 1") {
    SimConfig config{10, 4, 0.0, 1e-20, MixingLaw::pointmass(), 18, 1};
    config.xi = noncentrality<double>(beta, x, config.sigma_sq).xi;
    Rng rng(18);
    const auto stats = compute_stats(sample_data_full(config, x, beta, 1.5, rng));
    CHECK(stats.r_squared == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("intercept-only mean") {
    SimConfig config{10, 4, 0.0, 1.0, MixingLaw::pointmass(), 19, 1};
    RunningMoments m;
    for (std::int64_t rep = 0; rep < 20000; ++rep) {
      Rng rng(substream_seed(config.seed, rep));
      m.add(sample_data_full(config, x, Eigen::VectorXd::Zero(4), 5.0, rng).y.mean());
    }
    CHECK(std::abs(m.mean - 5.0) < 3.0 * m.std_error());
  }
  SUBCASE("xi consistency is enforced") {
    SimConfig config{10, 4, 123.0, 1.0, MixingLaw::pointmass(), 20, 1};
    Rng rng(20);
    CHECK_THROWS_AS(sample_data_full(config, x, beta, 0.0, rng), InconsistentXiError);
  }
}

TEST_CASE("R^2 from the two sampling paths agrees in distribution (KS)") {
  const int n = 10, p = 4;
  const double xi = 4.0;
  const auto x = fixed_design(n, p, 123);
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(p);
  beta *= std::sqrt(xi / (x * beta).squaredNorm());
  constexpr int kDraws = 100000;
  std::vector<double> direct(kDraws), full(kDraws);
  SimConfig config{n, p, xi, 1.0, MixingLaw::pointmass(), 21, 1};
  for (int rep = 0; rep < kDraws; ++rep) {
    Rng rng(substream_seed(1001, rep));
    direct[rep] = sample_stats_direct(config, rng).r_squared;
  }
  for (int rep = 0; rep < kDraws; ++rep) {
    Rng rng(substream_seed(1002, rep));
    full[rep] = compute_stats(sample_data_full(config, x, beta, 2.0, rng)).r_squared;
  }
  const double d = testsupport::ks_two_sample(direct, full);
  const double crit = testsupport::kKsCrit001 * std::sqrt(2.0 / kDraws);
  CHECK(d < crit);
}

TEST_CASE("replicate streams reproduce bit-identically") {
  SimConfig config{12, 5, 2.0, 1.0, MixingLaw::inverse_gamma_t(6.0), 22, 1};
  std::vector<SufficientStats> first, second;
  for (int pass = 0; pass < 2; ++pass) {
    auto& out = pass == 0 ? first : second;
    for (int rep = 0; rep < 200; ++rep) {
      Rng rng(substream_seed(config.seed, rep));
      out.push_back(sample_stats_direct(config, rng));
    }
  }
  for (int rep = 0; rep < 200; ++rep) {
    CHECK(first[rep].rss == second[rep].rss);
    CHECK(first[rep].total_ss == second[rep].total_ss);
    CHECK(first[rep].r_squared == second[rep].r_squared);
  }
  CHECK(first[0].rss != first[1].rss);
}

}
