#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "steinvar/estimators.hpp"
#include "steinvar/moments.hpp"
#include "steinvar/sampling.hpp"

namespace steinvar {

struct RiskPoint {
  double xi = 0;
  double risk = 0;
  double std_err = 0;
  std::int64_t replicates = 0;
};

/// Monte Carlo Stein-loss risk estimates over a grid of noncentrality values.
struct RiskCurve {
  EstimatorSpec estimator;
  MixingLaw mixing;
  int n = 0;
  int p = 0;
  std::vector<RiskPoint> points;  // sorted by xi
};

struct PairedPoint {
  double xi = 0;
  double delta = 0;    // mean of loss(baseline) - loss(challenger)
  double std_err = 0;  // paired standard error of delta
  double risk_baseline = 0;
  double se_baseline = 0;
  double risk_challenger = 0;
  double se_challenger = 0;
  std::int64_t replicates = 0;
};

enum class DominanceVerdict { DominatesWithinMC, Inconclusive, ViolationDetected };

inline std::string to_string(DominanceVerdict v) {
  switch (v) {
    case DominanceVerdict::DominatesWithinMC: return "DominatesWithinMC";
    case DominanceVerdict::Inconclusive: return "Inconclusive";
    case DominanceVerdict::ViolationDetected: return "ViolationDetected";
  }
  return "unknown";
}

/// Paired common-random-number comparison of two estimators. Violation means
/// some point fell below -k standard errors; dominance-within-MC additionally
/// asks for a significantly positive gap somewhere.
struct DominanceReport {
  EstimatorSpec baseline;
  EstimatorSpec challenger;
  MixingLaw mixing;
  int n = 0;
  int p = 0;
  double se_multiplier = 3.0;
  std::vector<PairedPoint> points;
  DominanceVerdict verdict = DominanceVerdict::Inconclusive;
};

namespace detail {

inline constexpr std::int64_t kBlockSize = 8192;

/// Run `body(replicate, rng, acc)` for every replicate, partitioned into
/// fixed blocks claimed by workers through an atomic counter. Block
/// accumulators merge over the index-keyed pairwise tree, so the result is
/// independent of the number of threads.
template <typename Acc, typename Body>
Acc run_blocked(std::int64_t replicates, std::uint64_t seed, int threads, Body body) {
  const std::int64_t nblocks = (replicates + kBlockSize - 1) / kBlockSize;
  std::vector<Acc> blocks(static_cast<std::size_t>(nblocks));
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = static_cast<int>(std::min<std::int64_t>(threads, nblocks));

  std::atomic<std::int64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::int64_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      const std::int64_t lo = b * kBlockSize;
      const std::int64_t hi = std::min(replicates, lo + kBlockSize);
      Acc& acc = blocks[static_cast<std::size_t>(b)];
      for (std::int64_t rep = lo; rep < hi; ++rep) {
        Rng rng(substream_seed(seed, static_cast<std::uint64_t>(rep)));
        body(rep, rng, acc);
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return reduce_pairwise(std::move(blocks));
}

struct PairedMoments {
  RunningMoments base, chal, diff;
  void merge(const PairedMoments& o) {
    base.merge(o.base);
    chal.merge(o.chal);
    diff.merge(o.diff);
  }
};

/// Certified runs require the hypotheses of the mixture dominance theorem:
/// both sides phi-form and the challenger's phi nondecreasing, checked on a
/// 1000-point grid.
inline void check_certifiable(const EstimatorSpec& spec, int n, int p) {
  if (!spec.phi_form())
    throw ChallengerNotPhiFormError("certified run requires phi-form estimator; '" +
                                    spec.name() + "' is not phi(R^2) RSS/(n-p-1)");
  constexpr int kGrid = 1000;
  double prev = phi_value(spec, 0.0, n, p);
  for (int i = 1; i < kGrid; ++i) {
    const double r2 = static_cast<double>(i) / (kGrid - 1);
    const double cur = phi_value(spec, r2, n, p);
    if (cur < prev - 1e-12)
      throw ChallengerNotPhiFormError("certified run requires nondecreasing phi; '" +
                                      spec.name() + "' decreases near R^2 = " +
                                      std::to_string(r2));
    prev = cur;
  }
}

}  // namespace detail

struct RiskOptions {
  int threads = 0;        // 0 = hardware concurrency
  bool certified = false; // enforce the monotone phi-form hypotheses up front
  double se_multiplier = 3.0;
};

/// Mean Stein loss (and its standard error) of one estimator at one grid
/// point, over config.replicates draws of the sufficient statistics.
inline RiskPoint estimate_risk(const EstimatorSpec& spec, const SimConfig& config,
                               int threads = 0) {
  config.validate();
  const auto acc = detail::run_blocked<RunningMoments>(
      config.replicates, config.seed, threads,
      [&](std::int64_t, Rng& rng, RunningMoments& m) {
        const SufficientStats stats = sample_stats_direct(config, rng);
        m.add(stein_loss(evaluate(spec, stats).value, config.sigma_sq));
      });
  return {config.xi, acc.mean, acc.std_error(), acc.count};
}

/// Paired CRN comparison across a list of configurations (one per xi).
inline DominanceReport compare_paired(const EstimatorSpec& baseline,
                                      const EstimatorSpec& challenger,
                                      const std::vector<SimConfig>& configs,
                                      const RiskOptions& options = {}) {
  DominanceReport report;
  report.baseline = baseline;
  report.challenger = challenger;
  report.se_multiplier = options.se_multiplier;
  if (!configs.empty()) {
    report.mixing = configs.front().mixing;
    report.n = configs.front().n;
    report.p = configs.front().p;
    if (options.certified) {
      detail::check_certifiable(baseline, report.n, report.p);
      detail::check_certifiable(challenger, report.n, report.p);
    }
  }
  bool any_violation = false;
  bool any_strict_gain = false;
  for (const auto& config : configs) {
    config.validate();
    const auto acc = detail::run_blocked<detail::PairedMoments>(
        config.replicates, config.seed, options.threads,
        [&](std::int64_t, Rng& rng, detail::PairedMoments& m) {
          const SufficientStats stats = sample_stats_direct(config, rng);
          const double loss_base = stein_loss(evaluate(baseline, stats).value, config.sigma_sq);
          const double loss_chal =
              stein_loss(evaluate(challenger, stats).value, config.sigma_sq);
          m.base.add(loss_base);
          m.chal.add(loss_chal);
          m.diff.add(loss_base - loss_chal);
        });
    PairedPoint point;
    point.xi = config.xi;
    point.delta = acc.diff.mean;
    point.std_err = acc.diff.std_error();
    point.risk_baseline = acc.base.mean;
    point.se_baseline = acc.base.std_error();
    point.risk_challenger = acc.chal.mean;
    point.se_challenger = acc.chal.std_error();
    point.replicates = acc.diff.count;
    if (point.delta < -report.se_multiplier * point.std_err) any_violation = true;
    if (point.delta > +report.se_multiplier * point.std_err) any_strict_gain = true;
    report.points.push_back(point);
  }
  report.verdict = any_violation    ? DominanceVerdict::ViolationDetected
                   : any_strict_gain ? DominanceVerdict::DominatesWithinMC
                                     : DominanceVerdict::Inconclusive;
  return report;
}

/// estimate_risk mapped over a xi grid; point i runs on substream_seed(seed, i)
/// so any single point reproduces bit-exactly in isolation.
inline RiskCurve risk_grid(const EstimatorSpec& spec, const MixingLaw& mixing, int n, int p,
                           const std::vector<double>& xi_grid, double sigma_sq,
                           std::int64_t replicates, std::uint64_t seed, int threads = 0) {
  RiskCurve curve;
  curve.estimator = spec;
  curve.mixing = mixing;
  curve.n = n;
  curve.p = p;
  for (std::size_t i = 0; i < xi_grid.size(); ++i) {
    SimConfig config{n, p, xi_grid[i], sigma_sq, mixing, substream_seed(seed, i), replicates};
    curve.points.push_back(estimate_risk(spec, config, threads));
  }
  return curve;
}

}  // namespace steinvar
