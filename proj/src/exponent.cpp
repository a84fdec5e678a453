#include "lfpp/exponent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <optional>

#include <boost/random/uniform_int_distribution.hpp>

#include "lfpp/bounds.hpp"
#include "lfpp/error.hpp"
#include "lfpp/metric.hpp"
#include "lfpp/parallel.hpp"
#include "lfpp/rng.hpp"
#include "lfpp/stats.hpp"

namespace lfpp {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_xi(double xi) {
  require(std::isfinite(xi) && xi >= 0.0, ErrorKind::domain, "xi must be finite and >= 0");
}

bool same_xi(double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a)); }

}  // namespace

std::uint64_t crossing_job_key(int d, int k) {
  return job_key("crossing/" + std::to_string(d) + "/" + std::to_string(k));
}

double flat_log_distance(int k) {
  require(k >= 0 && k < 31, ErrorKind::domain, "scale index out of range");
  const double eps = std::ldexp(1.0, -k);
  const long long sites = (1LL << k) + 1;
  double total = 0.0;
  for (long long i = 0; i < sites; ++i) total += eps;
  return std::log(total);
}

std::vector<ResultRecord> run_replicate(int d, std::span<const double> xis, int k, std::uint64_t seed,
                                        std::uint64_t job, const CellOptions& options) {
  require(!xis.empty(), ErrorKind::domain, "no xi values given");
  for (double xi : xis) check_xi(xi);
  const FieldSpec spec{d, k, options.padding_factor, options.layer_base_scale, seed, job};
  spec.validate();

  const auto t0 = Clock::now();
  std::shared_ptr<const FieldSample> field;
  if (std::any_of(xis.begin(), xis.end(), [](double xi) { return xi > 0.0; })) {
    field = std::make_shared<const FieldSample>(sample_field(spec, options.limits));
    if (options.field_hook) options.field_hook(*field);
  }
  const double field_seconds = seconds_since(t0);

  const Lattice lattice = spec.lattice();
  const DistanceQuery query = crossing_query(lattice);
  std::vector<ResultRecord> out;
  for (double xi : xis) {
    const auto t1 = Clock::now();
    const VertexWeights w = field ? VertexWeights::from_field(field, xi) : VertexWeights::flat(lattice);
    const double distance = set_to_set_distance(query, w).distance;
    ResultRecord r;
    r.dim = d;
    r.xi = xi;
    r.scale_index = k;
    r.seed = seed;
    r.log_distance = std::log(distance);
    if (options.record_timing) r.wall_seconds = field_seconds / static_cast<double>(xis.size()) + seconds_since(t1);
    out.push_back(r);
  }
  return out;
}

ResultRecord run_cell(int d, double xi, int k, std::uint64_t seed, std::uint64_t job, const CellOptions& options) {
  const double xis[] = {xi};
  return run_replicate(d, xis, k, seed, job, options).front();
}

void ExperimentPlan::validate() const {
  require(dim >= 2, ErrorKind::domain, "plan dimension must be >= 2");
  require(!xi_grid.empty(), ErrorKind::domain, "plan needs at least one xi");
  for (std::size_t i = 0; i < xi_grid.size(); ++i) {
    check_xi(xi_grid[i]);
    if (i > 0) require(xi_grid[i] > xi_grid[i - 1], ErrorKind::domain, "xi grid must be sorted ascending, no repeats");
  }
  require(k_min >= 2 && k_max >= k_min, ErrorKind::domain, "scale range must satisfy 2 <= k_min <= k_max");
  require(replicates >= 2, ErrorKind::domain, "need at least two replicates per cell");
  require(quantile > 0.0 && quantile < 1.0, ErrorKind::domain, "quantile level must lie in (0, 1)");
  require(bootstrap_resamples >= 200, ErrorKind::domain, "need at least 200 bootstrap resamples");
  if (xi_grid.back() > 0.0) {
    const FieldSpec top{dim, k_max, cell.padding_factor, cell.layer_base_scale, master_seed, 0};
    const std::size_t need = sampler_memory_bytes(top);
    require(need <= cell.limits.memory_cap_bytes, ErrorKind::resource_limit,
            "k_max = " + std::to_string(k_max) + " needs " + std::to_string(need) + " bytes per field, cap is " +
                std::to_string(cell.limits.memory_cap_bytes));
  }
}

std::uint64_t ExperimentPlan::replicate_seed(int r) const {
  return combine(master_seed, {job_key("replicate"), static_cast<std::uint64_t>(r)});
}

PlanOutcome run_plan(const ExperimentPlan& plan, int workers, const std::function<bool(const RecordKey&)>& have,
                     const std::function<void(const ResultRecord&)>& sink) {
  plan.validate();
  require(workers >= 1, ErrorKind::domain, "worker count must be >= 1");

  struct Job {
    int k;
    std::uint64_t seed;
    std::vector<double> xis;
    std::vector<ResultRecord> records;
    std::optional<JobFailure> failure;
  };
  std::vector<Job> jobs;
  for (int k = plan.k_min; k <= plan.k_max; ++k) {
    for (int r = 0; r < plan.replicates; ++r) {
      Job job{k, plan.replicate_seed(r), {}, {}, std::nullopt};
      for (double xi : plan.xi_grid) {
        if (!have(RecordKey{plan.dim, xi, k, job.seed})) job.xis.push_back(xi);
      }
      if (!job.xis.empty()) jobs.push_back(std::move(job));
    }
  }

  CellOptions cell = plan.cell;
  cell.limits.memory_cap_bytes /= static_cast<std::size_t>(workers);
  PlanOutcome outcome;
  run_partitioned(
      jobs.size(), workers,
      [&](std::size_t i) {
        return static_cast<std::size_t>(combine(static_cast<std::uint64_t>(plan.dim),
                                                {static_cast<std::uint64_t>(jobs[i].k), jobs[i].seed}));
      },
      [&](std::size_t i) {
        Job& job = jobs[i];
        try {
          job.records = run_replicate(plan.dim, job.xis, job.k, job.seed, crossing_job_key(plan.dim, job.k), cell);
        } catch (const Error& e) {
          job.failure = JobFailure{plan.dim, job.k, job.seed, std::string(to_string(e.kind())), e.what()};
        } catch (const std::exception& e) {
          job.failure = JobFailure{plan.dim, job.k, job.seed, "internal", e.what()};
        }
      },
      [&](std::size_t i) {
        Job& job = jobs[i];
        ++outcome.jobs_run;
        if (job.failure) {
          outcome.failures.push_back(*job.failure);
          return;
        }
        for (const auto& r : job.records) {
          sink(r);
          ++outcome.records_written;
        }
        job.records.clear();
        job.records.shrink_to_fit();
      });
  return outcome;
}

ExponentEstimate estimate_lambda(std::span<const ResultRecord> records, int d, double xi,
                                 const EstimatorOptions& options) {
  check_xi(xi);
  require(options.quantile > 0.0 && options.quantile < 1.0, ErrorKind::domain, "quantile level must lie in (0, 1)");
  require(options.resamples >= 200, ErrorKind::domain, "need at least 200 bootstrap resamples");

  std::vector<ResultRecord> selected;
  for (const auto& r : records) {
    if (r.dim == d && r.xi == xi && r.scale_index >= options.k_min && r.scale_index <= options.k_max) {
      selected.push_back(r);
    }
  }
  sort_records(selected);
  std::map<int, std::vector<double>> by_scale;
  for (const auto& r : selected) by_scale[r.scale_index].push_back(r.log_distance - flat_log_distance(r.scale_index));
  require(by_scale.size() >= 3, ErrorKind::underdetermined_fit,
          "need records at >= 3 scales, have " + std::to_string(by_scale.size()));

  ExponentEstimate est;
  est.dim = d;
  est.xi = xi;
  est.quantile_level = options.quantile;
  est.bootstrap_seed = combine(options.master_seed, {job_key("bootstrap"), static_cast<std::uint64_t>(d)});

  std::vector<double> x, y;
  for (auto& [k, values] : by_scale) {
    std::sort(values.begin(), values.end());
    ScaleQuantile s;
    s.scale_index = k;
    s.log_spacing = -k * std::log(2.0);
    s.quantile = quantile_sorted(values, options.quantile);
    s.replicates = static_cast<int>(values.size());
    est.per_scale.push_back(s);
    x.push_back(s.log_spacing);
    y.push_back(s.quantile);
  }

  // Resample indices come from one stream per (seed, d), so resample b draws
  // the same replicate positions at every xi.
  Engine engine(est.bootstrap_seed);
  const std::size_t B = static_cast<std::size_t>(options.resamples);
  std::vector<std::vector<double>> boot(B, std::vector<double>(by_scale.size()));
  std::vector<double> scratch;
  for (std::size_t b = 0; b < B; ++b) {
    std::size_t j = 0;
    for (const auto& [k, values] : by_scale) {
      boost::random::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
      scratch.resize(values.size());
      for (double& v : scratch) v = values[pick(engine)];
      std::sort(scratch.begin(), scratch.end());
      boot[b][j++] = quantile_sorted(scratch, options.quantile);
    }
  }
  std::vector<double> weights(by_scale.size());
  std::vector<double> column(B);
  for (std::size_t j = 0; j < by_scale.size(); ++j) {
    for (std::size_t b = 0; b < B; ++b) column[b] = boot[b][j];
    est.per_scale[j].bootstrap_variance = sample_variance(column);
    weights[j] = 1.0 / (est.per_scale[j].bootstrap_variance + 1e-12);
  }

  const LineFit fit = fit_line(x, y, weights);
  est.lambda_hat = fit.slope;
  est.intercept = fit.intercept;
  est.r_squared = fit.r_squared;
  est.residuals = fit.residuals;
  est.bootstrap_slopes.resize(B);
  for (std::size_t b = 0; b < B; ++b) est.bootstrap_slopes[b] = fit_line(x, boot[b], weights).slope;
  est.std_error = std::sqrt(sample_variance(est.bootstrap_slopes));
  return est;
}

ExponentEstimate estimate_lambda(std::span<const ResultRecord> records, const ExperimentPlan& plan, double xi) {
  EstimatorOptions o;
  o.quantile = plan.quantile;
  o.resamples = plan.bootstrap_resamples;
  o.master_seed = plan.master_seed;
  o.k_min = plan.k_min;
  o.k_max = plan.k_max;
  return estimate_lambda(records, plan.dim, xi, o);
}

namespace {

bool paired(const ExponentEstimate& a, const ExponentEstimate& b) {
  if (a.bootstrap_slopes.empty() || a.bootstrap_slopes.size() != b.bootstrap_slopes.size()) return false;
  if (a.bootstrap_seed != b.bootstrap_seed || a.per_scale.size() != b.per_scale.size()) return false;
  for (std::size_t j = 0; j < a.per_scale.size(); ++j) {
    if (a.per_scale[j].scale_index != b.per_scale[j].scale_index ||
        a.per_scale[j].replicates != b.per_scale[j].replicates) {
      return false;
    }
  }
  return true;
}

std::vector<const ExponentEstimate*> sorted_by_xi(std::span<const ExponentEstimate> estimates) {
  std::vector<const ExponentEstimate*> out;
  for (const auto& e : estimates) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->xi < b->xi; });
  for (auto* e : out) require(e->dim == out.front()->dim, ErrorKind::incompatible_estimates, "estimates mix dimensions");
  return out;
}

}  // namespace

std::vector<DerivativeEstimate> estimate_derivative(std::span<const ExponentEstimate> estimates) {
  require(estimates.size() >= 3, ErrorKind::underdetermined_fit, "need estimates at >= 3 xi values");
  const auto e = sorted_by_xi(estimates);
  const double h = e[1]->xi - e[0]->xi;
  require(h > 0.0, ErrorKind::grid_spacing, "repeated xi values");
  for (std::size_t i = 1; i < e.size(); ++i) {
    const double step = e[i]->xi - e[i - 1]->xi;
    require(std::fabs(step - h) <= 1e-9 * std::max(1.0, h), ErrorKind::grid_spacing,
            "xi grid is not uniformly spaced");
  }
  std::vector<DerivativeEstimate> out;
  for (std::size_t i = 1; i + 1 < e.size(); ++i) {
    const ExponentEstimate& lo = *e[i - 1];
    const ExponentEstimate& hi = *e[i + 1];
    const double width = hi.xi - lo.xi;
    DerivativeEstimate der;
    der.xi = e[i]->xi;
    der.spacing = 0.5 * width;
    der.lambda_prime_hat = (hi.lambda_hat - lo.lambda_hat) / width;
    der.paired = paired(lo, hi);
    if (der.paired) {
      std::vector<double> diffs(lo.bootstrap_slopes.size());
      for (std::size_t b = 0; b < diffs.size(); ++b) diffs[b] = (hi.bootstrap_slopes[b] - lo.bootstrap_slopes[b]) / width;
      der.std_error = std::sqrt(sample_variance(diffs));
    } else {
      der.std_error = std::hypot(lo.std_error, hi.std_error) / width;
    }
    out.push_back(der);
  }
  return out;
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::violation: return "violation";
    case Verdict::contradiction: return "contradiction";
    case Verdict::excluded: return "excluded";
  }
  return "unknown";
}

Verdict classify_margin(double margin, double sigma) {
  if (margin >= -2.0 * sigma) return Verdict::pass;
  if (margin >= -4.0 * sigma) return Verdict::violation;
  return Verdict::contradiction;
}

InequalityReport check_differential_inequalities(const ExponentEstimate& est, const DerivativeEstimate& der, int d) {
  require(same_xi(est.xi, der.xi), ErrorKind::incompatible_estimates, "estimate and derivative are at different xi");
  require(d >= 2, ErrorKind::domain, "d must be >= 2");
  InequalityReport r;
  r.dim = d;
  r.xi = est.xi;
  r.lambda_hat = est.lambda_hat;
  r.lambda_prime_hat = der.lambda_prime_hat;
  const double xi = est.xi, lam = est.lambda_hat;

  r.neg_xi_bound = -xi;
  r.lower_bound = -xi;
  r.lower_branch = "-xi";
  double lower_dlam = 0.0;
  if (xi == 0.0) {
    r.ratio_excluded = true;
  } else {
    r.ratio_bound = (lam - 1.0) / xi;
    if (r.ratio_bound > r.lower_bound) {
      r.lower_bound = r.ratio_bound;
      r.lower_branch = "(lambda-1)/xi";
      lower_dlam = 1.0 / xi;
    }
  }
  const double radicand = 2.0 * (d - 1) + 2.0 * lam + xi * xi;
  require(radicand >= 0.0, ErrorKind::domain, "upper bound undefined: negative radicand");
  r.upper_bound = std::sqrt(radicand) - xi;
  const double upper_dlam = radicand > 0.0 ? 1.0 / std::sqrt(radicand) : 0.0;

  r.lower_margin = r.lambda_prime_hat - r.lower_bound;
  r.upper_margin = r.upper_bound - r.lambda_prime_hat;
  r.lower_sigma = std::hypot(der.std_error, lower_dlam * est.std_error);
  r.upper_sigma = std::hypot(der.std_error, upper_dlam * est.std_error);
  r.lower_verdict = classify_margin(r.lower_margin, r.lower_sigma);
  r.upper_verdict = classify_margin(r.upper_margin, r.upper_sigma);
  return r;
}

LipschitzReport check_lipschitz(std::span<const ExponentEstimate> estimates, int d) {
  require(d >= 2, ErrorKind::domain, "d must be >= 2");
  LipschitzReport rep;
  rep.dim = d;
  rep.constant = std::sqrt(2.0 * d);
  if (estimates.empty()) return rep;
  const auto e = sorted_by_xi(estimates);
  for (std::size_t i = 1; i < e.size(); ++i) {
    PairCheck p;
    p.xi_a = e[i - 1]->xi;
    p.xi_b = e[i]->xi;
    p.change = e[i]->lambda_hat - e[i - 1]->lambda_hat;
    p.allowed = rep.constant * (p.xi_b - p.xi_a) + 2.0 * (e[i - 1]->std_error + e[i]->std_error);
    p.flagged = std::fabs(p.change) > p.allowed;
    rep.passed = rep.passed && !p.flagged;
    rep.pairs.push_back(p);
  }
  return rep;
}

MonotoneReport check_monotone_in_dimension(const ExponentEstimate& est_d, const ExponentEstimate& est_d_plus) {
  require(same_xi(est_d.xi, est_d_plus.xi), ErrorKind::incompatible_estimates, "estimates are at different xi");
  require(est_d_plus.dim > est_d.dim, ErrorKind::incompatible_estimates, "second estimate must have larger d");
  MonotoneReport r;
  r.xi = est_d.xi;
  r.dim_low = est_d.dim;
  r.dim_high = est_d_plus.dim;
  r.lambda_low = est_d.lambda_hat;
  r.lambda_high = est_d_plus.lambda_hat;
  r.tolerance = 2.0 * (est_d.std_error + est_d_plus.std_error);
  r.margin = r.lambda_high - r.lambda_low + r.tolerance;
  r.passed = r.margin >= 0.0;
  return r;
}

XiMonotoneReport check_monotone_in_xi(std::span<const ExponentEstimate> estimates) {
  XiMonotoneReport rep;
  if (estimates.empty()) return rep;
  const auto e = sorted_by_xi(estimates);
  rep.dim = e.front()->dim;
  for (std::size_t i = 1; i < e.size(); ++i) {
    PairCheck p;
    p.xi_a = e[i - 1]->xi;
    p.xi_b = e[i]->xi;
    p.change = e[i]->lambda_hat - e[i - 1]->lambda_hat;
    p.allowed = 2.0 * (e[i - 1]->std_error + e[i]->std_error);
    p.flagged = -p.change > p.allowed;
    rep.passed = rep.passed && !p.flagged;
    rep.pairs.push_back(p);
  }
  return rep;
}

BracketReport check_bracket(const ExponentEstimate& est, double allowance) {
  const BoundReport b = lambda_bounds(est.dim, est.xi);
  BracketReport r;
  r.dim = est.dim;
  r.xi = est.xi;
  r.lambda_hat = est.lambda_hat;
  r.lower = b.lower;
  r.upper = b.upper;
  r.allowance = allowance;
  r.passed = est.lambda_hat >= b.lower - allowance && est.lambda_hat <= b.upper + allowance;
  return r;
}

QuantileRobustnessReport check_quantile_robustness(std::span<const ResultRecord> records, int d, double xi,
                                                   EstimatorOptions options) {
  QuantileRobustnessReport rep;
  rep.dim = d;
  rep.xi = xi;
  for (double p : {0.25, 0.5, 0.75}) {
    options.quantile = p;
    rep.estimates.push_back(estimate_lambda(records, d, xi, options));
  }
  rep.passed = true;
  for (std::size_t i = 0; i < rep.estimates.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.estimates.size(); ++j) {
      const double diff = std::fabs(rep.estimates[i].lambda_hat - rep.estimates[j].lambda_hat);
      const double se = rep.estimates[i].std_error + rep.estimates[j].std_error;
      const double ratio = se > 0.0 ? diff / se : (diff > 0.0 ? INFINITY : 0.0);
      rep.worst_ratio = std::max(rep.worst_ratio, ratio);
      rep.passed = rep.passed && ratio <= 3.0;
    }
  }
  return rep;
}

ThickPointReport thick_point_scan(int d, double alpha, int k_min, int k_max, int replicates, std::uint64_t seed,
                                  const CellOptions& options, int workers) {
  require(alpha > 0.0 && std::isfinite(alpha), ErrorKind::domain, "alpha must be positive");
  require(k_min >= 1 && k_max >= k_min, ErrorKind::domain, "scale range must satisfy 1 <= k_min <= k_max");
  require(replicates >= 1, ErrorKind::domain, "need at least one replicate");
  require(workers >= 1, ErrorKind::domain, "worker count must be >= 1");

  ThickPointReport rep;
  rep.dim = d;
  rep.alpha = alpha;
  rep.expected_exponent = d - alpha * alpha / 2.0;
  const int scales = k_max - k_min + 1;
  for (int k = k_min; k <= k_max; ++k) {
    ThickPointScale s;
    s.scale_index = k;
    s.sites = Lattice::dyadic(d, k).size();
    s.counts.assign(static_cast<std::size_t>(replicates), 0);
    rep.per_scale.push_back(std::move(s));
  }

  SamplerLimits limits = options.limits;
  limits.memory_cap_bytes /= static_cast<std::size_t>(workers);
  const std::size_t jobs = static_cast<std::size_t>(scales) * static_cast<std::size_t>(replicates);
  run_partitioned(
      jobs, workers, [](std::size_t i) { return static_cast<std::size_t>(mix64(i)); },
      [&](std::size_t i) {
        const int j = static_cast<int>(i / static_cast<std::size_t>(replicates));
        const auto r = static_cast<std::uint64_t>(i % static_cast<std::size_t>(replicates));
        const int k = k_min + j;
        const FieldSpec spec{d, k, options.padding_factor, options.layer_base_scale, combine(seed, r),
                             job_key("thick/" + std::to_string(d) + "/" + std::to_string(k))};
        const FieldSample f = sample_field(spec, limits);
        const double threshold = alpha * std::log(spec.spacing());
        std::uint64_t count = 0;
        for (double v : f.values()) count += v < threshold ? 1 : 0;
        rep.per_scale[static_cast<std::size_t>(j)].counts[r] = count;
      },
      [](std::size_t) {});

  std::vector<double> x, y;
  for (auto& s : rep.per_scale) {
    long double total = 0.0L;
    for (auto c : s.counts) total += static_cast<long double>(c);
    s.mean_count = static_cast<double>(total / static_cast<long double>(s.counts.size()));
    if (s.mean_count > 0.0) {
      x.push_back(s.scale_index * std::log(2.0));
      y.push_back(std::log(s.mean_count));
    }
  }
  rep.low_power = alpha * alpha / 2.0 >= d || x.size() < static_cast<std::size_t>(scales) || x.size() < 2;
  if (x.size() >= 2) {
    const LineFit fit = fit_line(x, y);
    rep.fitted_exponent = fit.slope;
    rep.fit_stderr = fit.slope_stderr;
  }
  return rep;
}

}  // namespace lfpp
