// Command-line front end: estimate variances on CSV data, tabulate shrinkage
// curves, run Monte Carlo risk comparisons, and verify the numerical
// machinery. Exit codes: 0 ok, 1 usage, 2 data, 3 internal property
// violation, 4 verification failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "steinvar/bayes_oracle.hpp"
#include "steinvar/estimators.hpp"
#include "steinvar/io.hpp"
#include "steinvar/risk.hpp"

using json = nlohmann::ordered_json;
using namespace steinvar;

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct PropertyViolation : Error {
  using Error::Error;
};

// --- spec grammars -----------------------------------------------------------

std::vector<std::pair<std::string, std::string>> parse_kv_list(const std::string& text,
                                                               const std::string& what) {
  std::vector<std::pair<std::string, std::string>> items;
  std::istringstream is(text);
  std::string token;
  while (std::getline(is, token, ',')) {
    const auto eq = token.find('=');
    if (eq == std::string::npos)
      items.emplace_back("", token);
    else
      items.emplace_back(token.substr(0, eq), token.substr(eq + 1));
    if (items.back().second.empty())
      throw UsageError("empty value in " + what + " parameters: '" + text + "'");
  }
  return items;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw UsageError("cannot parse number '" + text + "' in " + what);
  }
}

/// Estimator grammar kind[:key=value,...]: u, stein, bz, gb:a=2, sbstar.
EstimatorSpec parse_estimator(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string params = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "u" || kind == "unbiased") return EstimatorSpec::unbiased();
  if (kind == "stein" || kind == "st") return EstimatorSpec::stein();
  if (kind == "bz") return EstimatorSpec::brewster_zidek();
  if (kind == "sbstar") return EstimatorSpec::simple_bayes_star();
  if (kind == "gb") {
    std::optional<double> a;
    for (const auto& [key, value] : parse_kv_list(params, "gb")) {
      if (key == "a" || key.empty())
        a = parse_number(value, "gb:a");
      else
        throw UsageError("unknown gb parameter '" + key + "'");
    }
    if (!a) throw UsageError("gb estimator needs a shrinkage exponent, e.g. gb:a=2");
    return EstimatorSpec::generalized_bayes(*a);
  }
  throw UsageError("unknown estimator '" + text + "' (expected u, stein, bz, gb:a=A, sbstar)");
}

/// Mixing grammar: gauss | t:NU | two:V1,V2[,W].
MixingLaw parse_mixing(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string params = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "gauss" || kind == "gaussian" || kind == "normal" || kind == "pointmass")
    return MixingLaw::pointmass();
  if (kind == "t") {
    if (params.empty()) throw UsageError("t mixing needs degrees of freedom, e.g. t:5");
    const auto items = parse_kv_list(params, "t");
    if (items.size() != 1 || (!items[0].first.empty() && items[0].first != "nu"))
      throw UsageError("t mixing takes one parameter, e.g. t:5");
    return MixingLaw::inverse_gamma_t(parse_number(items[0].second, "t:nu"));
  }
  if (kind == "two") {
    std::optional<double> v1, v2, w;
    std::size_t position = 0;
    for (const auto& [key, value] : parse_kv_list(params, "two")) {
      const double number = parse_number(value, "two");
      if (key == "v1" || (key.empty() && position == 0))
        v1 = number;
      else if (key == "v2" || (key.empty() && position == 1))
        v2 = number;
      else if (key == "w" || (key.empty() && position == 2))
        w = number;
      else
        throw UsageError("unknown two-point parameter '" + key + "'");
      ++position;
    }
    if (!v1 || !v2) throw UsageError("two-point mixing needs v1 and v2, e.g. two:0.5,2");
    return w ? MixingLaw::two_point(*v1, *v2, *w) : MixingLaw::two_point_balanced(*v1, *v2);
  }
  throw UsageError("unknown mixing law '" + text + "' (expected gauss, t:NU, two:V1,V2[,W])");
}

// --- output helpers ----------------------------------------------------------

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
  return buf;
}

std::string metadata_line(json meta) {
  meta["timestamp"] = iso_timestamp();
  return "# " + meta.dump() + "\n";
}

std::string curve_csv(const json& meta, const std::vector<RiskPoint>& points) {
  std::string out = metadata_line(meta);
  out += "xi,risk,std_err,replicates\n";
  for (const auto& pt : points)
    out += format_double(pt.xi) + "," + format_double(pt.risk) + "," +
           format_double(pt.std_err) + "," + std::to_string(pt.replicates) + "\n";
  return out;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-")
    std::cout << content;
  else
    write_atomic(path, content);
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("STEINVAR_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError("STEINVAR_SEED must be an unsigned integer");
    }
  }
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// --- estimate ----------------------------------------------------------------

struct EstimateArgs {
  std::string data_path;
  std::vector<std::string> estimators;
  std::string format = "csv";
  std::string out;
};

int cmd_estimate(const EstimateArgs& args) {
  std::vector<std::pair<std::string, EstimatorSpec>> specs;
  for (const auto& text : args.estimators) specs.emplace_back(text, parse_estimator(text));

  const RegressionData data = read_regression_csv(args.data_path);
  const SufficientStats stats = compute_stats(data);

  if (specs.empty()) {
    specs.emplace_back("u", EstimatorSpec::unbiased());
    specs.emplace_back("stein", EstimatorSpec::stein());
    specs.emplace_back("bz", EstimatorSpec::brewster_zidek());
    if (stats.p >= 3) specs.emplace_back("gb:a=2", EstimatorSpec::generalized_bayes(2.0));
  }

  json rows = json::array();
  for (const auto& [name, spec] : specs) {
    const VarianceEstimate est = evaluate(spec, stats);
    rows.push_back({{"estimator", spec.name()}, {"phi", est.phi}, {"delta", est.value}});
  }

  std::string command = "steinvar estimate --data " + args.data_path;
  for (const auto& [name, spec] : specs) command += " --estimator " + name;

  if (args.format == "json") {
    json doc{{"command", command}, {"n", stats.n},
             {"p", stats.p},       {"rss", stats.rss},
             {"total_ss", stats.total_ss}, {"r_squared", stats.r_squared},
             {"estimates", rows}};
    emit(args.out, doc.dump(2) + "\n");
  } else if (args.format == "csv") {
    json meta{{"kind", "estimate"}, {"command", command}, {"data", args.data_path},
              {"n", stats.n},       {"p", stats.p},       {"rss", stats.rss},
              {"total_ss", stats.total_ss}, {"r_squared", stats.r_squared}};
    std::string out = metadata_line(meta);
    out += "estimator,phi,delta\n";
    for (const auto& row : rows)
      out += row["estimator"].get<std::string>() + "," +
             format_double(row["phi"].get<double>()) + "," +
             format_double(row["delta"].get<double>()) + "\n";
    emit(args.out, out);
  } else {
    throw UsageError("--format must be csv or json");
  }
  return 0;
}

// --- phi-table ---------------------------------------------------------------

struct PhiTableArgs {
  int n = 0, p = 0;
  std::vector<double> a_list{2.0};
  int grid = 101;
  std::string out;
};

int cmd_phi_table(const PhiTableArgs& args) {
  if (args.grid < 2) throw UsageError("--grid must be at least 2");
  if (args.n <= args.p + 1 || args.p < 1) throw UsageError("need n > p + 1 and p >= 1");
  for (double a : args.a_list)
    if (!(a > 0) || !(a < args.p))
      throw UsageError("gb exponent a must satisfy 0 < a < p");

  const int rows = args.grid;
  std::vector<double> r2(rows);
  std::vector<double> bz(rows);
  std::vector<std::vector<double>> gb(args.a_list.size(), std::vector<double>(rows));
  for (int i = 0; i < rows; ++i) {
    r2[i] = static_cast<double>(i) / (rows - 1);
    bz[i] = phi_bz(r2[i], args.n, args.p);
    for (std::size_t j = 0; j < args.a_list.size(); ++j)
      gb[j][i] = phi_gb(args.a_list[j], r2[i], args.n, args.p);
  }

  // The dominance theory lives on these properties; a violation here is a
  // numerical bug, not a user error.
  for (int i = 0; i < rows; ++i) {
    if (bz[i] <= 0 || bz[i] > 1 + 1e-12)
      throw PropertyViolation("phi_bz out of (0,1] at row " + std::to_string(i));
    if (i > 0 && bz[i] < bz[i - 1] - 1e-12)
      throw PropertyViolation("phi_bz not nondecreasing at row " + std::to_string(i));
    for (std::size_t j = 0; j < args.a_list.size(); ++j) {
      if (gb[j][i] <= 0 || gb[j][i] > 1 + 1e-12)
        throw PropertyViolation("phi_gb out of (0,1] at row " + std::to_string(i));
      if (i > 0 && gb[j][i] < gb[j][i - 1] - 1e-12)
        throw PropertyViolation("phi_gb not nondecreasing at row " + std::to_string(i));
      if (gb[j][i] < bz[i] - 1e-12)
        throw PropertyViolation("phi_gb fell below phi_bz at row " + std::to_string(i));
    }
  }

  std::string command = "steinvar phi-table --n " + std::to_string(args.n) + " --p " +
                        std::to_string(args.p) + " --grid " + std::to_string(args.grid);
  for (double a : args.a_list) command += " --a " + format_double(a);

  json meta{{"kind", "phi_table"}, {"command", command}, {"n", args.n},
            {"p", args.p},         {"a", args.a_list},   {"grid", args.grid}};
  std::string out = metadata_line(meta);
  out += "r_squared,phi_bz";
  for (double a : args.a_list) out += ",phi_gb_a" + format_double(a);
  out += "\n";
  for (int i = 0; i < rows; ++i) {
    out += format_double(r2[i]) + "," + format_double(bz[i]);
    for (std::size_t j = 0; j < args.a_list.size(); ++j) out += "," + format_double(gb[j][i]);
    out += "\n";
  }
  emit(args.out, out);
  return 0;
}

// --- risk-sim ----------------------------------------------------------------

struct RiskSimArgs {
  int n = 0, p = 0;
  std::string estimator;
  std::string baseline, challenger;
  std::string mixing = "gauss";
  std::vector<double> xi_grid{0, 1, 4, 16, 64, 256};
  std::int64_t replicates = 100000;
  double sigma_sq = 1.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  bool certified = false;
  std::string out;
};

json base_metadata(const RiskSimArgs& args, const MixingLaw& mixing) {
  // --threads is deliberately not recorded: it cannot change any output.
  std::string command = "steinvar risk-sim --n " + std::to_string(args.n) + " --p " +
                        std::to_string(args.p);
  if (!args.estimator.empty()) command += " --estimator " + args.estimator;
  if (!args.baseline.empty()) command += " --baseline " + args.baseline;
  if (!args.challenger.empty()) command += " --challenger " + args.challenger;
  command += " --mixing " + args.mixing + " --xi ";
  for (std::size_t i = 0; i < args.xi_grid.size(); ++i)
    command += (i ? "," : "") + format_double(args.xi_grid[i]);
  command += " --replicates " + std::to_string(args.replicates);
  command += " --sigma-sq " + format_double(args.sigma_sq);
  command += " --seed " + std::to_string(args.seed);
  if (args.certified) command += " --certified";
  if (!args.out.empty()) command += " --out " + args.out;

  return json{{"kind", ""},
              {"command", command},
              {"n", args.n},
              {"p", args.p},
              {"mixing", mixing.name()},
              {"sigma_sq", args.sigma_sq},
              {"xi_grid", args.xi_grid},
              {"replicates", args.replicates},
              {"seed", args.seed},
              {"rng", "splitmix64-substreams"},
              {"normal_method", "polar"},
              {"gamma_method", "marsaglia-tsang"}};
}

int cmd_risk_sim(const RiskSimArgs& args) {
  if (args.replicates < 1) throw UsageError("--replicates must be >= 1");
  if (args.n <= args.p + 1 || args.p < 1) throw UsageError("need n > p + 1 and p >= 1");
  if (args.xi_grid.empty()) throw UsageError("--xi grid must not be empty");
  if (!(args.sigma_sq > 0)) throw UsageError("--sigma-sq must be positive");
  const MixingLaw mixing = parse_mixing(args.mixing);

  const bool paired = !args.baseline.empty() || !args.challenger.empty();
  if (paired && (args.baseline.empty() || args.challenger.empty()))
    throw UsageError("paired mode needs both --baseline and --challenger");
  if (paired == !args.estimator.empty())
    throw UsageError("give either --estimator or a --baseline/--challenger pair");

  if (!paired) {
    const EstimatorSpec spec = parse_estimator(args.estimator);
    const RiskCurve curve = risk_grid(spec, mixing, args.n, args.p, args.xi_grid,
                                      args.sigma_sq, args.replicates, args.seed, args.threads);
    json meta = base_metadata(args, mixing);
    meta["kind"] = "risk_curve";
    meta["estimator"] = spec.name();
    emit(args.out.empty() ? "" : args.out + ".csv", curve_csv(meta, curve.points));
    for (const auto& pt : curve.points)
      std::cout << "xi=" << pt.xi << "  risk=" << pt.risk << "  se=" << pt.std_err << "\n";
    return 0;
  }

  const EstimatorSpec baseline = parse_estimator(args.baseline);
  const EstimatorSpec challenger = parse_estimator(args.challenger);
  std::vector<SimConfig> configs;
  for (std::size_t i = 0; i < args.xi_grid.size(); ++i)
    configs.push_back({args.n, args.p, args.xi_grid[i], args.sigma_sq, mixing,
                       substream_seed(args.seed, i), args.replicates});
  RiskOptions options;
  options.threads = args.threads;
  options.certified = args.certified;
  const DominanceReport report = compare_paired(baseline, challenger, configs, options);

  json points = json::array();
  std::vector<RiskPoint> base_points, chal_points;
  for (const auto& pt : report.points) {
    points.push_back({{"xi", pt.xi},
                      {"delta", pt.delta},
                      {"std_err", pt.std_err},
                      {"risk_baseline", pt.risk_baseline},
                      {"se_baseline", pt.se_baseline},
                      {"risk_challenger", pt.risk_challenger},
                      {"se_challenger", pt.se_challenger},
                      {"replicates", pt.replicates}});
    base_points.push_back({pt.xi, pt.risk_baseline, pt.se_baseline, pt.replicates});
    chal_points.push_back({pt.xi, pt.risk_challenger, pt.se_challenger, pt.replicates});
  }

  json meta = base_metadata(args, mixing);
  if (!args.out.empty()) {
    json base_meta = meta;
    base_meta["kind"] = "risk_curve";
    base_meta["estimator"] = baseline.name();
    emit(args.out + "_baseline.csv", curve_csv(base_meta, base_points));
    json chal_meta = meta;
    chal_meta["kind"] = "risk_curve";
    chal_meta["estimator"] = challenger.name();
    emit(args.out + "_challenger.csv", curve_csv(chal_meta, chal_points));
  }

  json doc = meta;
  doc["kind"] = "dominance_report";
  doc["baseline"] = baseline.name();
  doc["challenger"] = challenger.name();
  doc["se_multiplier"] = report.se_multiplier;
  doc["certified"] = args.certified;
  doc["points"] = points;
  doc["verdict"] = to_string(report.verdict);
  doc["timestamp"] = iso_timestamp();
  emit(args.out.empty() ? "" : args.out + "_report.json", doc.dump(2) + "\n");

  std::cout << "verdict: " << to_string(report.verdict) << "\n";
  return 0;
}

// --- verify ------------------------------------------------------------------

struct VerifyArgs {
  std::string level = "quick";
  std::string out;
  int threads = 0;
};

struct Check {
  std::string name;
  double residual;
  double tolerance;
  bool pass() const { return residual <= tolerance; }
};

void run_quick_checks(std::vector<Check>& checks) {
  // Shrinkage-factor anchors at R^2 = 0 and R^2 -> 1.
  for (auto [n, p, a] : {std::tuple{10, 4, 2.0}, {12, 5, 3.0}, {30, 6, 2.0}}) {
    const double gb0 = phi_gb(a, 0.0, n, p);
    const double anchor = static_cast<double>(n - p - 1) / (n - a - 1);
    checks.push_back({"phi_gb_anchor_r2=0_n" + std::to_string(n), std::abs(gb0 - anchor), 1e-10});
    const double bz0 = phi_bz(0.0, n, p);
    checks.push_back({"phi_bz_anchor_r2=0_n" + std::to_string(n),
                      std::abs(bz0 - (1.0 - static_cast<double>(p) / (n - 1))), 1e-10});
    checks.push_back({"phi_gb_anchor_r2=1_n" + std::to_string(n),
                      std::abs(phi_gb(a, 1 - 1e-9, n, p) - 1.0), 1e-9});
    checks.push_back({"phi_bz_anchor_r2=1_n" + std::to_string(n),
                      std::abs(phi_bz(1.0, n, p) - 1.0), 1e-9});
  }

  // Quadrature identities.
  double worst = 0;
  for (auto [b, c, m] : {std::tuple{1.5, 1.0, 2.5}, {0.8, 0.6, 1.2}, {2.5, 3.0, -0.5}}) {
    worst = std::max(worst, std::abs(beta_integral({b, c, m, 0.0}) / beta_fn(b, c) - 1.0));
  }
  checks.push_back({"beta_integral_z0_identity", worst, 1e-13});
  worst = 0;
  for (auto [b, c, m] : {std::tuple{1.5, 1.0, 2.5}, {0.8, 0.6, 1.2}, {2.0, 1.0, 1.5}})
    worst = std::max(worst,
                     std::abs(beta_integral({b, c, m, 1.0}) / beta_fn(b, c + m) - 1.0));
  checks.push_back({"beta_integral_z1_identity", worst, 1e-10});
  worst = 0;
  for (double z : {0.2, 0.6, 0.95})
    for (auto [b, c, m] : {std::tuple{1.5, 1.0, 2.5}, {0.7, 0.5, -0.5}})
      worst = std::max(worst, std::abs(beta_integral({b, c, m, z}) /
                                           beta_integral_series({b, c, m, z}) -
                                       1.0));
  checks.push_back({"beta_integral_series_cross", worst, 1e-10});

  // Bracketing and monotonicity of the shrinkage factors on a 1000-point grid.
  double order_violation = 0;
  double prev_bz = 0, prev_gb = 0;
  for (int i = 0; i < 1000; ++i) {
    const double r2 = static_cast<double>(i) / 999;
    const double bz = phi_bz(r2, 10, 4);
    const double gb = phi_gb(2.0, r2, 10, 4);
    order_violation = std::max(order_violation, bz - gb);
    order_violation = std::max(order_violation, gb - 1.0);
    if (i > 0) {
      order_violation = std::max(order_violation, prev_bz - bz);
      order_violation = std::max(order_violation, prev_gb - gb);
    }
    prev_bz = bz;
    prev_gb = gb;
  }
  checks.push_back({"phi_bracketing_monotone_grid", std::max(order_violation, 0.0), 1e-12});

  // Radial normalization identities.
  const auto gauss_report = verify_normalization(SamplingDensity::gaussian(8));
  checks.push_back({"normalization_gaussian",
                    std::max({gauss_report.mass_residual, gauss_report.second_moment_residual,
                              gauss_report.proof_constant_residual}),
                    1e-10});
  for (double nu : {5.0, 9.0}) {
    const auto report = verify_normalization(SamplingDensity::student_t(8, nu));
    checks.push_back({"normalization_t" + std::to_string(static_cast<int>(nu)),
                      std::max({report.mass_residual, report.second_moment_residual,
                                report.proof_constant_residual}),
                      1e-8});
  }

  // Prior geometry: mixture identity and Laplacian signs.
  worst = 0;
  for (auto [q, s2, a, p] : {std::tuple{0.7, 1.3, 1.0, 4}, {2.0, 0.5, 2.0, 5}, {1.1, 2.2, 3.0, 5}})
    worst = std::max(worst, mixture_identity_residual(q, s2, a, p));
  checks.push_back({"power_prior_mixture_identity", worst, 1e-8});

  Eigen::VectorXd theta(5);
  theta << 0.6, -0.4, 0.5, 0.3, -0.2;
  theta /= theta.norm();
  auto power = [](double a) {
    return [a](const Eigen::VectorXd& t) { return std::pow(t.squaredNorm(), -0.5 * (5 - a)); };
  };
  const double lap3 = fd_laplacian(power(3.0), theta, 1e-3);
  checks.push_back({"superharmonic_a3_negative", lap3 < 0 ? 0.0 : lap3, 0.0});
  checks.push_back({"harmonic_a2_zero", std::abs(fd_laplacian(power(2.0), theta, 1e-3)), 1e-4});
}

void run_full_checks(std::vector<Check>& checks, int threads) {
  // Oracle equivalence: first-principles generalized Bayes vs closed form.
  std::mt19937_64 gen(424242);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(10, 4);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 4; ++j) x(i, j) = normal(gen);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) y[i] = 0.4 + 0.6 * x.row(i).sum() + normal(gen);
  const RegressionData data(y, x);
  const auto stats = compute_stats(data);
  const auto density10 = SamplingDensity::gaussian(10);
  for (double a : {1.0, 2.0, 3.0}) {
    const double oracle = gb_estimate_oracle(data, PriorSpec::separable_power(a), density10);
    const double closed = delta_gb(a, stats).value;
    checks.push_back({"oracle_equivalence_a" + std::to_string(static_cast<int>(a)),
                      std::abs(oracle / closed - 1.0), 1e-6});
  }

  // Distribution independence of the generalized Bayes ratio.
  Eigen::MatrixXd x6(6, 1);
  Eigen::VectorXd y6(6);
  for (int i = 0; i < 6; ++i) {
    x6(i, 0) = normal(gen);
    y6[i] = 0.3 + 0.8 * x6(i, 0) + 0.9 * normal(gen);
  }
  const RegressionData data6(y6, x6);
  const auto prior = PriorSpec::generic_separable([](double alpha, const Eigen::VectorXd& beta) {
    return std::exp(-0.5 * beta.squaredNorm() - alpha * alpha / 50.0);
  });
  OracleOptions options;
  options.rel_tol = 1e-8;
  std::vector<double> ratios;
  for (const auto& density :
       {SamplingDensity::gaussian(6), SamplingDensity::student_t(6, 5.0),
        SamplingDensity::student_t(6, 9.0)})
    ratios.push_back(gb_estimate_oracle(data6, prior, density, options));
  const double spread = (*std::max_element(ratios.begin(), ratios.end()) -
                         *std::min_element(ratios.begin(), ratios.end())) /
                        ratios.front();
  checks.push_back({"distribution_independence_6x1", spread, 1e-5});

  // Dominance spot checks with common random numbers.
  for (const auto& mixing : {MixingLaw::pointmass(), MixingLaw::inverse_gamma_t(5.0)}) {
    std::vector<SimConfig> configs;
    const std::vector<double> xis{0.0, 4.0, 64.0};
    for (std::size_t i = 0; i < xis.size(); ++i)
      configs.push_back({10, 4, xis[i], 1.0, mixing, substream_seed(9090, i), 200000});
    RiskOptions ropts;
    ropts.threads = threads;
    const auto report = compare_paired(EstimatorSpec::unbiased(),
                                       EstimatorSpec::generalized_bayes(2.0), configs, ropts);
    double violation = 0;
    for (const auto& pt : report.points)
      violation = std::max(violation, -(pt.delta + 3.0 * pt.std_err));
    const auto& origin = report.points.front();
    checks.push_back({"dominance_" + mixing.name() + "_no_violation", violation, 0.0});
    checks.push_back({"dominance_" + mixing.name() + "_gain_at_origin",
                      origin.delta > 3.0 * origin.std_err ? 0.0 : 1.0, 0.0});
  }

  // Sufficiency-path equivalence at one spot configuration.
  Eigen::MatrixXd xf = center_design<double>(x);
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(4);
  beta *= std::sqrt(4.0 / (xf * beta).squaredNorm());
  SimConfig config{10, 4, 4.0, 1.0, MixingLaw::pointmass(), 777, 100000};
  const auto direct = estimate_risk(EstimatorSpec::generalized_bayes(2.0), config, threads);
  RunningMoments full;
  for (std::int64_t rep = 0; rep < config.replicates; ++rep) {
    Rng rng(substream_seed(778, rep));
    const auto s = compute_stats(sample_data_full(config, xf, beta, 1.0, rng));
    full.add(stein_loss(evaluate(EstimatorSpec::generalized_bayes(2.0), s).value, 1.0));
  }
  checks.push_back({"sufficiency_path_equivalence", std::abs(direct.risk - full.mean),
                    3.0 * std::hypot(direct.std_err, full.std_error())});
}

int cmd_verify(const VerifyArgs& args) {
  if (args.level != "quick" && args.level != "full")
    throw UsageError("--level must be quick or full");
  std::vector<Check> checks;
  run_quick_checks(checks);
  if (args.level == "full") run_full_checks(checks, args.threads);

  json items = json::array();
  bool all_pass = true;
  for (const auto& check : checks) {
    items.push_back({{"check", check.name},
                     {"residual", check.residual},
                     {"tolerance", check.tolerance},
                     {"pass", check.pass()}});
    all_pass = all_pass && check.pass();
  }
  json doc{{"kind", "verify_report"}, {"level", args.level}, {"checks", items},
           {"all_pass", all_pass}};
  emit(args.out, doc.dump(2) + "\n");
  if (!all_pass) {
    std::cerr << "failed checks:";
    for (const auto& check : checks)
      if (!check.pass()) std::cerr << " " << check.name;
    std::cerr << "\n";
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust variance estimation for linear regression"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value configuration file");

  EstimateArgs estimate_args;
  auto* estimate = app.add_subcommand("estimate", "apply estimators to CSV data");
  estimate->add_option("--data", estimate_args.data_path, "CSV file: y, then predictors")
      ->required();
  estimate->add_option("--estimator", estimate_args.estimators,
                       "estimator spec (u, stein, bz, gb:a=A, sbstar); repeatable");
  estimate->add_option("--format", estimate_args.format, "csv or json");
  estimate->add_option("--out", estimate_args.out, "output path (default: stdout)");

  PhiTableArgs phi_args;
  auto* phi_table = app.add_subcommand("phi-table", "tabulate shrinkage factors over R^2");
  phi_table->add_option("--n", phi_args.n)->required();
  phi_table->add_option("--p", phi_args.p)->required();
  phi_table->add_option("--a", phi_args.a_list, "gb exponents")->delimiter(',');
  phi_table->add_option("--grid", phi_args.grid, "number of R^2 grid rows");
  phi_table->add_option("--out", phi_args.out, "output path (default: stdout)");

  RiskSimArgs risk_args;
  auto* risk_sim = app.add_subcommand("risk-sim", "Monte Carlo Stein-loss risk");
  risk_sim->add_option("--n", risk_args.n)->required();
  risk_sim->add_option("--p", risk_args.p)->required();
  risk_sim->add_option("--estimator", risk_args.estimator, "single-curve mode");
  risk_sim->add_option("--baseline", risk_args.baseline, "paired mode: baseline estimator");
  risk_sim->add_option("--challenger", risk_args.challenger, "paired mode: challenger");
  risk_sim->add_option("--mixing", risk_args.mixing, "gauss, t:NU, or two:V1,V2[,W]");
  risk_sim->add_option("--xi", risk_args.xi_grid, "noncentrality grid")->delimiter(',');
  risk_sim->add_option("--replicates", risk_args.replicates, "Monte Carlo replicates per point");
  risk_sim->add_option("--sigma-sq", risk_args.sigma_sq, "true error variance");
  auto* seed_opt = risk_sim->add_option("--seed", risk_args.seed, "run seed (default: entropy)");
  risk_sim->add_option("--threads", risk_args.threads, "worker threads (0 = all cores)");
  risk_sim->add_flag("--certified", risk_args.certified,
                     "enforce the monotone phi-form hypotheses before running");
  risk_sim->add_option("--out", risk_args.out, "output path prefix");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "run numerical self-checks");
  verify->add_option("--level", verify_args.level, "quick or full");
  verify->add_option("--out", verify_args.out, "report path (default: stdout)");
  verify->add_option("--threads", verify_args.threads, "worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*estimate) return cmd_estimate(estimate_args);
    if (*phi_table) return cmd_phi_table(phi_args);
    if (*risk_sim) {
      if (seed_opt->count() == 0) risk_args.seed = default_seed();
      risk_args.seed_given = seed_opt->count() > 0;
      return cmd_risk_sim(risk_args);
    }
    if (*verify) return cmd_verify(verify_args);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ParameterRangeViolationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const BadShrinkageOrderError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ChallengerNotPhiFormError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NonPositiveVarianceError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const PropertyViolation& e) {
    std::cerr << "internal property violation: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
