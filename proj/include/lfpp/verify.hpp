#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lfpp/exponent.hpp"
#include "lfpp/report.hpp"

namespace lfpp {

struct CheckResult {
  std::string id;
  std::string title;
  bool passed = false;
  std::string summary;  // no timings: this ends up in data files
  double seconds = 0.0;
  Json data;
};

Json to_json(const CheckResult& c);

// Individual checks. Each is deterministic given its seed.

/// Slope of site-averaged variance against k ln 2, per dimension.
CheckResult check_field_variance(const std::vector<int>& dims, int k_min, int k_max, int replicates,
                                 std::uint64_t seed, const SamplerLimits& limits);

/// Slope of pair-averaged covariance against -ln|x - y| over axis offsets.
CheckResult check_field_covariance(int d, int k, int replicates, double r_min, double r_max, std::uint64_t seed,
                                   const SamplerLimits& limits);

/// Increment variances of the x_3 = 0 slice of 3d samples against native 2d samples.
CheckResult check_restriction(int k, int replicates, double r_min, double r_max, std::uint64_t seed,
                              const SamplerLimits& limits);

/// Dijkstra against exhaustive path enumeration on 3x3 and 4x4 grids.
CheckResult check_metric_oracle(int instances, std::uint64_t seed);

/// Flat crossing distance is exactly 1 + e.
CheckResult check_flat_exactness(const std::vector<int>& dims, int k_min, int k_max);

struct Campaign {
  std::vector<ExperimentPlan> plans;
  std::vector<ResultRecord> records;
  std::map<std::pair<int, double>, ExponentEstimate> estimates;
  std::vector<JobFailure> failures;
  std::map<int, double> seconds_by_dim;

  const ExponentEstimate& at(int d, double xi) const;
};

/// Runs the plans (resuming from `store` when given) and estimates every (d, xi).
Campaign run_campaign(std::vector<ExperimentPlan> plans, int workers, const std::filesystem::path& store);

CheckResult check_known_value(const Campaign& c, double lo, double hi);
CheckResult check_zero_exponent(const Campaign& c);
CheckResult check_brackets(const Campaign& c, const std::vector<int>& dims, const std::vector<double>& xis,
                           double allowance);
CheckResult check_dimension_monotone(const Campaign& c, int d_low, int d_high, const std::vector<double>& xis);
/// Inequality chain at interior points of a uniform xi grid, plus synthetic
/// estimates that must be flagged.
CheckResult check_inequality_audit(const Campaign& c, int d, const std::vector<double>& xis);

CheckResult check_thick_points(const std::vector<int>& dims, double alpha, int k_min, int k_max, int replicates,
                               std::uint64_t seed, const SamplerLimits& limits, int workers, double tolerance);

CheckResult check_bound_algebra();
CheckResult check_d_gamma_solver();

/// A store whose bytes were altered must be rejected on open.
CheckResult check_store_corruption(const std::filesystem::path& scratch_dir);

struct VerifyOptions {
  bool quick = false;
  std::uint64_t seed = 1;
  int workers = 1;
  std::size_t memory_cap = std::size_t{4} << 30;
  std::filesystem::path out;  // empty: nothing written
  std::vector<std::string> only;
};

/// The suite behind `lfpp verify`: writes records.csv, estimates.json and
/// verify.json under `out`, prints one line per check to `log`.
std::vector<CheckResult> run_verify(const VerifyOptions& options, std::ostream& log);

/// Uniform ascending grid of `count` points spanning [a, b].
std::vector<double> even_grid(double a, double b, int count);

}  // namespace lfpp
