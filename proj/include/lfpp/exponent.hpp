#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lfpp/field.hpp"
#include "lfpp/records.hpp"

namespace lfpp {

struct CellOptions {
  double padding_factor = 2.0;
  double layer_base_scale = 1.0;
  SamplerLimits limits;
  /// Store measured wall time in records; off keeps data files reproducible.
  bool record_timing = false;
  /// Called with each sampled field (e.g. to save snapshots).
  std::function<void(const FieldSample&)> field_hook;
};

/// Job key of the crossing field at (d, k); independent of xi so one field
/// serves every xi of a replicate.
std::uint64_t crossing_job_key(int d, int k);

/// log of the xi = 0 crossing distance, accumulated as the shortest-path
/// search does (every crossing visits 2^k + 1 sites of weight 2^-k).
double flat_log_distance(int k);

/// One field sample, left-right crossing distance for each xi.
std::vector<ResultRecord> run_replicate(int d, std::span<const double> xis, int k, std::uint64_t seed,
                                        std::uint64_t job_key, const CellOptions& options = {});

ResultRecord run_cell(int d, double xi, int k, std::uint64_t seed, std::uint64_t job_key,
                      const CellOptions& options = {});

struct ExperimentPlan {
  int dim = 2;
  std::vector<double> xi_grid;
  int k_min = 4;
  int k_max = 9;
  int replicates = 20;
  std::uint64_t master_seed = 0;
  double quantile = 0.5;
  int bootstrap_resamples = 200;
  CellOptions cell;

  void validate() const;
  std::uint64_t replicate_seed(int r) const;
};

struct JobFailure {
  int dim = 0;
  int scale_index = 0;
  std::uint64_t seed = 0;
  std::string kind;
  std::string message;
};

struct PlanOutcome {
  std::size_t jobs_run = 0;
  std::size_t records_written = 0;
  std::vector<JobFailure> failures;
};

/// Runs every (k, replicate) job whose records are missing. `have` reports
/// records already stored; `sink` receives new records in canonical job
/// order regardless of worker count. Each worker gets memory_cap / workers.
PlanOutcome run_plan(const ExperimentPlan& plan, int workers, const std::function<bool(const RecordKey&)>& have,
                     const std::function<void(const ResultRecord&)>& sink);

struct EstimatorOptions {
  double quantile = 0.5;
  int resamples = 200;
  std::uint64_t master_seed = 0;
  int k_min = 0;
  int k_max = 1 << 20;
};

struct ScaleQuantile {
  int scale_index = 0;
  double log_spacing = 0.0;  // -k ln 2
  double quantile = 0.0;     // of log D - log D_flat
  double bootstrap_variance = 0.0;
  int replicates = 0;
};

struct ExponentEstimate {
  int dim = 0;
  double xi = 0.0;
  double lambda_hat = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  double quantile_level = 0.5;
  double r_squared = 0.0;
  std::vector<ScaleQuantile> per_scale;
  std::vector<double> residuals;
  /// Slopes of the bootstrap resamples; resamples share one index stream per
  /// (seed, d), so draws at different xi are paired.
  std::vector<double> bootstrap_slopes;
  std::uint64_t bootstrap_seed = 0;
};

/// Weighted least-squares slope of the per-k quantile of log D against
/// log e, with bootstrap standard error.
ExponentEstimate estimate_lambda(std::span<const ResultRecord> records, int d, double xi,
                                 const EstimatorOptions& options);
ExponentEstimate estimate_lambda(std::span<const ResultRecord> records, const ExperimentPlan& plan, double xi);

struct DerivativeEstimate {
  double xi = 0.0;
  double lambda_prime_hat = 0.0;
  double std_error = 0.0;
  double spacing = 0.0;
  bool paired = false;
};

/// Central differences at interior points of a uniform xi grid.
std::vector<DerivativeEstimate> estimate_derivative(std::span<const ExponentEstimate> estimates);

enum class Verdict { pass, violation, contradiction, excluded };
std::string_view to_string(Verdict v) noexcept;

/// pass if margin >= -2 sigma, violation if >= -4 sigma, else contradiction.
Verdict classify_margin(double margin, double sigma);

struct InequalityReport {
  int dim = 0;
  double xi = 0.0;
  double lambda_hat = 0.0;
  double lambda_prime_hat = 0.0;
  double neg_xi_bound = 0.0;
  double ratio_bound = 0.0;  // (lambda - 1)/xi; unset at xi = 0
  bool ratio_excluded = false;
  double lower_bound = 0.0;
  std::string lower_branch;
  double upper_bound = 0.0;
  double lower_margin = 0.0;
  double upper_margin = 0.0;
  double lower_sigma = 0.0;
  double upper_sigma = 0.0;
  Verdict lower_verdict = Verdict::pass;
  Verdict upper_verdict = Verdict::pass;

  bool passed() const noexcept { return lower_verdict == Verdict::pass && upper_verdict == Verdict::pass; }
};

/// max{-xi, (lambda - 1)/xi} <= lambda' <= sqrt(2(d-1) + 2 lambda + xi^2) - xi.
InequalityReport check_differential_inequalities(const ExponentEstimate& est, const DerivativeEstimate& der, int d);

struct PairCheck {
  double xi_a = 0.0;
  double xi_b = 0.0;
  double change = 0.0;     // lambda(b) - lambda(a)
  double allowed = 0.0;
  bool flagged = false;
};

struct LipschitzReport {
  int dim = 0;
  double constant = 0.0;  // sqrt(2d)
  std::vector<PairCheck> pairs;
  bool passed = true;
};

/// |lambda(xi_{i+1}) - lambda(xi_i)| <= sqrt(2d) dxi + 2 (se_i + se_{i+1}).
LipschitzReport check_lipschitz(std::span<const ExponentEstimate> estimates, int d);

struct MonotoneReport {
  double xi = 0.0;
  int dim_low = 0;
  int dim_high = 0;
  double lambda_low = 0.0;
  double lambda_high = 0.0;
  double tolerance = 0.0;
  double margin = 0.0;  // lambda_high - lambda_low + tolerance
  bool passed = false;
};

/// lambda(d+, xi) >= lambda(d, xi) - 2 (se_d + se_d+).
MonotoneReport check_monotone_in_dimension(const ExponentEstimate& est_d, const ExponentEstimate& est_d_plus);

struct XiMonotoneReport {
  int dim = 0;
  std::vector<PairCheck> pairs;  // allowed = 2 (se_a + se_b); flagged when the drop exceeds it
  bool passed = true;
};

XiMonotoneReport check_monotone_in_xi(std::span<const ExponentEstimate> estimates);

struct BracketReport {
  int dim = 0;
  double xi = 0.0;
  double lambda_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double allowance = 0.0;
  bool passed = false;
};

/// lambda_hat within [lower - allowance, upper + allowance] of lambda_bounds.
BracketReport check_bracket(const ExponentEstimate& est, double allowance = 0.1);

struct QuantileRobustnessReport {
  int dim = 0;
  double xi = 0.0;
  std::vector<ExponentEstimate> estimates;  // one per quantile level
  double worst_ratio = 0.0;  // max |difference| / combined stderr
  bool passed = false;
};

/// Estimates at p = 0.25, 0.5, 0.75 agree within 3 (se_a + se_b).
QuantileRobustnessReport check_quantile_robustness(std::span<const ResultRecord> records, int d, double xi,
                                                   EstimatorOptions options);

struct ThickPointScale {
  int scale_index = 0;
  std::uint64_t sites = 0;
  std::vector<std::uint64_t> counts;
  double mean_count = 0.0;
};

struct ThickPointReport {
  int dim = 0;
  double alpha = 0.0;
  std::vector<ThickPointScale> per_scale;
  double fitted_exponent = 0.0;
  double fit_stderr = 0.0;
  double expected_exponent = 0.0;  // d - alpha^2 / 2
  bool low_power = false;
};

/// Counts sites with h < alpha log e per scale and fits log E N against log(1/e).
ThickPointReport thick_point_scan(int d, double alpha, int k_min, int k_max, int replicates, std::uint64_t seed,
                                  const CellOptions& options = {}, int workers = 1);

}  // namespace lfpp
