#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lfpp {

double mean(std::span<const double> xs);
/// Unbiased sample variance; requires at least two values.
double sample_variance(std::span<const double> xs);
double sample_covariance(std::span<const double> xs, std::span<const double> ys);
/// Linear-interpolation quantile (Hyndman-Fan type 7). Sorts a copy.
double quantile(std::span<const double> xs, double p);
double quantile_sorted(std::span<const double> sorted, double p);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  // classical standard error, 0 when n = 2
  double r_squared = 0.0;
  std::vector<double> residuals;
};

/// Least squares y ~ a + b x. With non-empty weights, weighted least squares.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights = {});

/// Running mean/variance (Welford).
class RunningMoments {
 public:
  void add(double x) noexcept;
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;  // unbiased
  double skewness() const noexcept;  // sample g1
  double excess_kurtosis() const noexcept;  // sample g2

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

/// Running covariance of paired observations.
class RunningCovariance {
 public:
  void add(double x, double y) noexcept;
  std::size_t count() const noexcept { return n_; }
  double covariance() const noexcept;  // unbiased

 private:
  std::size_t n_ = 0;
  double mx_ = 0.0, my_ = 0.0, cxy_ = 0.0;
};

}  // namespace lfpp
