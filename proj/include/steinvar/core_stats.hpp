#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "steinvar/common.hpp"

namespace steinvar {

/// Sufficient statistics of the centered regression problem. Every estimator
/// in this library is a function of these five numbers only.
struct SufficientStats {
  int n = 0;
  int p = 0;
  double rss = 0;       // squared residual norm after the least-squares fit
  double total_ss = 0;  // ||y - ybar 1||^2
  double r_squared = 0;

  static SufficientStats from_parts(int n, int p, double rss, double total_ss) {
    if (total_ss <= 0) throw DegenerateResponseError("total sum of squares must be positive");
    SufficientStats s;
    s.n = n;
    s.p = p;
    s.rss = std::min(std::max(rss, 0.0), total_ss);
    s.total_ss = total_ss;
    s.r_squared = 1.0 - s.rss / s.total_ss;
    return s;
  }
};

struct NoncentralityPoint {
  double xi = 0;  // beta' X'X beta / sigma^2
};

/// Subtract column means; the only change is the shift.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> center_design(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x_raw) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> x = x_raw;
  if (x.rows() == 0) return x;
  x.rowwise() -= x_raw.colwise().mean();
  return x;
}

/// Response + centered design. Construction centers the columns and checks
/// the n > p + 1 sample-size requirement; rank is checked when stats are
/// computed (through the orthogonal decomposition).
template <typename Scalar>
struct RegressionDataT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector y;
  Matrix x;  // centered, n x p

  RegressionDataT(Vector y_in, Matrix x_raw)
      : y(std::move(y_in)), x(center_design<Scalar>(x_raw)) {
    if (y.size() != x.rows())
      throw DataFormatError("response length does not match design rows");
    if (n() <= p() + 1)
      throw DataFormatError("need n > p + 1 (got n = " + std::to_string(n()) +
                            ", p = " + std::to_string(p()) + ")");
  }

  int n() const { return static_cast<int>(x.rows()); }
  int p() const { return static_cast<int>(x.cols()); }
};

using RegressionData = RegressionDataT<double>;

inline constexpr double kRankTolerance = 1e-10;

/// RSS, total SS and R^2 through a column-pivoted Householder QR of the
/// centered design; X'X is never formed. Rank failure is flagged when the
/// smallest |R_ii| falls below 1e-10 times the largest.
template <typename Scalar>
SufficientStats compute_stats(const RegressionDataT<Scalar>& data) {
  using Vector = typename RegressionDataT<Scalar>::Vector;
  const int n = data.n();
  const int p = data.p();

  Vector v = data.y.array() - data.y.mean();
  const Scalar total_ss = v.squaredNorm();
  if (total_ss == Scalar(0))
    throw DegenerateResponseError("response is constant: total sum of squares is zero");

  Eigen::ColPivHouseholderQR<typename RegressionDataT<Scalar>::Matrix> qr(data.x);
  const auto r_diag = qr.matrixR().diagonal().head(p).cwiseAbs().eval();
  const Scalar largest = r_diag.maxCoeff();
  const Scalar smallest = r_diag.minCoeff();
  if (largest == Scalar(0) || smallest < Scalar(kRankTolerance) * largest)
    throw RankDeficientError("centered design is numerically rank deficient");

  Vector qtv = qr.householderQ().transpose() * v;
  const Scalar fitted_ss = qtv.head(p).squaredNorm();
  const Scalar rss = qtv.tail(n - p).squaredNorm();

  SufficientStats stats;
  stats.n = n;
  stats.p = p;
  stats.rss = static_cast<double>(rss);
  stats.total_ss = static_cast<double>(total_ss);
  stats.r_squared = std::min(1.0, std::max(0.0, static_cast<double>(fitted_ss / total_ss)));
  return stats;
}

/// xi = ||X beta||^2 / sigma^2.
template <typename Scalar>
NoncentralityPoint noncentrality(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& beta,
                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x,
                                 double sigma_sq) {
  if (!(sigma_sq > 0)) throw NonPositiveVarianceError("sigma^2 must be positive");
  return {static_cast<double>((x * beta).squaredNorm()) / sigma_sq};
}

}  // namespace steinvar
