#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "steinvar/core_stats.hpp"
#include "steinvar/rng.hpp"

namespace steinvar {

/// Distribution of the mixing scale tau^2 defining a scale mixture of
/// normals; every law is normalized so that E[tau^2] = 1, which keeps the
/// component variance of the error equal to sigma^2.
struct MixingLaw {
  enum class Kind { PointMass, InverseGammaT, TwoPoint };

  Kind kind = Kind::PointMass;
  double nu = 0;  // InverseGammaT
  double v1 = 1, v2 = 1, w = 1;  // TwoPoint

  /// tau^2 = 1: plain Gaussian errors.
  static MixingLaw pointmass() { return {}; }

  /// tau^2 ~ InvGamma(nu/2, (nu-2)/2): the error law is multivariate-t with
  /// nu degrees of freedom, scaled to unit component variance. Needs nu > 2.
  static MixingLaw inverse_gamma_t(double nu) {
    if (!(nu > 2)) throw ParameterRangeViolationError("multivariate-t mixing needs nu > 2");
    MixingLaw law;
    law.kind = Kind::InverseGammaT;
    law.nu = nu;
    return law;
  }

  static MixingLaw two_point(double v1, double v2, double w) {
    if (!(v1 > 0) || !(v2 > 0) || !(w > 0) || !(w < 1))
      throw ParameterRangeViolationError("two-point mixing needs v1, v2 > 0 and w in (0,1)");
    if (std::abs(w * v1 + (1 - w) * v2 - 1.0) > 1e-12)
      throw ParameterRangeViolationError("two-point mixing must satisfy E[tau^2] = 1");
    MixingLaw law;
    law.kind = Kind::TwoPoint;
    law.v1 = v1;
    law.v2 = v2;
    law.w = w;
    return law;
  }

  /// Two-point law with the weight solved from E[tau^2] = 1.
  static MixingLaw two_point_balanced(double v1, double v2) {
    if (!(v1 > 0) || !(v2 > 0) || v1 == v2)
      throw ParameterRangeViolationError("two-point mixing needs distinct positive v1, v2");
    const double w = (1.0 - v2) / (v1 - v2);
    if (!(w > 0) || !(w < 1))
      throw ParameterRangeViolationError("no weight in (0,1) makes E[tau^2] = 1 for these v1, v2");
    return two_point(v1, v2, w);
  }

  double sample_tau_sq(Rng& rng) const {
    switch (kind) {
      case Kind::PointMass: return 1.0;
      case Kind::InverseGammaT: return 1.0 / (rng.gamma(0.5 * nu) * (2.0 / (nu - 2.0)));
      case Kind::TwoPoint: return rng.uniform() < w ? v1 : v2;
    }
    return 1.0;
  }

  std::string name() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::PointMass: os << "gauss"; break;
      case Kind::InverseGammaT: os << "t:" << nu; break;
      case Kind::TwoPoint: os << "two:" << v1 << "," << v2 << "," << w; break;
    }
    return os.str();
  }
};

inline double sample_tau_sq(const MixingLaw& law, Rng& rng) { return law.sample_tau_sq(rng); }

/// Geometry and budget of one simulation experiment. alpha and beta enter
/// the risk only through xi, so the direct sampler never needs them.
struct SimConfig {
  int n = 0;
  int p = 0;
  double xi = 0;
  double sigma_sq = 1.0;
  MixingLaw mixing;
  std::uint64_t seed = 0;
  std::int64_t replicates = 1;

  void validate() const {
    if (n <= p + 1 || p < 1) throw ParameterRangeViolationError("SimConfig needs n > p + 1, p >= 1");
    if (!(xi >= 0)) throw ParameterRangeViolationError("SimConfig needs xi >= 0");
    if (!(sigma_sq > 0)) throw NonPositiveVarianceError("SimConfig needs sigma^2 > 0");
    if (replicates < 1) throw ParameterRangeViolationError("SimConfig needs replicates >= 1");
  }
};

/// One draw of the sufficient statistics without touching an n-vector:
/// conditional on tau^2, U ~ chi^2_p(xi/tau^2) and V ~ chi^2_{n-p-1}
/// independently, RSS = sigma^2 tau^2 V, total = sigma^2 tau^2 (U+V),
/// R^2 = U/(U+V). Simulation runs at unit scale and rescales on output.
inline SufficientStats sample_stats_direct(const SimConfig& config, Rng& rng) {
  const double tau_sq = config.mixing.sample_tau_sq(rng);
  const double u = rng.noncentral_chi_square(config.p, config.xi / tau_sq);
  const double v = rng.chi_square(config.n - config.p - 1);
  SufficientStats stats;
  stats.n = config.n;
  stats.p = config.p;
  stats.rss = config.sigma_sq * tau_sq * v;
  stats.total_ss = config.sigma_sq * tau_sq * (u + v);
  stats.r_squared = u / (u + v);
  return stats;
}

/// Full-model draw y = alpha 1 + X beta + sigma tau z. The configured xi
/// must match the (beta, X, sigma^2) actually supplied.
inline RegressionData sample_data_full(const SimConfig& config, const Eigen::MatrixXd& x,
                                       const Eigen::VectorXd& beta, double alpha, Rng& rng) {
  const double xi = noncentrality<double>(beta, x, config.sigma_sq).xi;
  if (std::abs(xi - config.xi) > 1e-9 * std::max(1.0, config.xi))
    throw InconsistentXiError("config.xi does not match beta' X'X beta / sigma^2");
  const double tau = std::sqrt(config.mixing.sample_tau_sq(rng));
  const double sigma = std::sqrt(config.sigma_sq);
  Eigen::VectorXd y = x * beta;
  for (int i = 0; i < y.size(); ++i) y[i] += alpha + sigma * tau * rng.normal();
  return RegressionData(std::move(y), x);
}

}  // namespace steinvar
