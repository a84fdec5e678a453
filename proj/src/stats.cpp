#include "lfpp/stats.hpp"

#include <algorithm>
#include <cmath>

#include "lfpp/error.hpp"

namespace lfpp {

double mean(std::span<const double> xs) {
  require(!xs.empty(), ErrorKind::domain, "mean of empty sample");
  long double s = 0.0L;
  for (double x : xs) s += x;
  return static_cast<double>(s / static_cast<long double>(xs.size()));
}

double sample_variance(std::span<const double> xs) { return sample_covariance(xs, xs); }

double sample_covariance(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorKind::domain, "covariance of unequal samples");
  require(xs.size() >= 2, ErrorKind::domain, "covariance needs at least two values");
  const double mx = mean(xs), my = mean(ys);
  long double s = 0.0L;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (xs[i] - mx) * (ys[i] - my);
  return static_cast<double>(s / static_cast<long double>(xs.size() - 1));
}

double quantile_sorted(std::span<const double> sorted, double p) {
  require(!sorted.empty(), ErrorKind::domain, "quantile of empty sample");
  require(p >= 0.0 && p <= 1.0, ErrorKind::domain, "quantile level outside [0,1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> xs, double p) {
  std::vector<double> copy(xs.begin(), xs.end());
  std::sort(copy.begin(), copy.end());
  return quantile_sorted(copy, p);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> weights) {
  const std::size_t n = x.size();
  require(n == y.size(), ErrorKind::domain, "fit_line: x and y differ in length");
  require(weights.empty() || weights.size() == n, ErrorKind::domain, "fit_line: weight length mismatch");
  require(n >= 2, ErrorKind::underdetermined_fit, "fit_line needs at least two points");
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require(w(i) > 0.0 && std::isfinite(w(i)), ErrorKind::domain, "fit_line: weights must be positive");
    sw += w(i);
    sx += w(i) * x[i];
    sy += w(i) * y[i];
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - xbar, dy = y[i] - ybar;
    sxx += w(i) * dx * dx;
    sxy += w(i) * dx * dy;
    syy += w(i) * dy * dy;
  }
  require(sxx > 0.0, ErrorKind::underdetermined_fit, "fit_line: x values are all equal");

  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  fit.residuals.resize(n);
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fit.residuals[i] = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += w(i) * fit.residuals[i] * fit.residuals[i];
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.slope_stderr = n > 2 ? std::sqrt(sse / static_cast<double>(n - 2) / sxx) : 0.0;
  return fit;
}

void RunningMoments::add(double x) noexcept {
  const double n1 = static_cast<double>(n_);
  ++n_;
  const double n = static_cast<double>(n_);
  const double delta = x - mean_;
  const double delta_n = delta / n;
  const double delta_n2 = delta_n * delta_n;
  const double term1 = delta * delta_n * n1;
  mean_ += delta_n;
  m4_ += term1 * delta_n2 * (n * n - 3 * n + 3) + 6 * delta_n2 * m2_ - 4 * delta_n * m3_;
  m3_ += term1 * delta_n * (n - 2) - 3 * delta_n * m2_;
  m2_ += term1;
}

double RunningMoments::variance() const noexcept {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double RunningMoments::skewness() const noexcept {
  if (n_ < 2 || m2_ <= 0.0) return 0.0;
  const double n = static_cast<double>(n_);
  return std::sqrt(n) * m3_ / std::pow(m2_, 1.5);
}

double RunningMoments::excess_kurtosis() const noexcept {
  if (n_ < 2 || m2_ <= 0.0) return 0.0;
  const double n = static_cast<double>(n_);
  return n * m4_ / (m2_ * m2_) - 3.0;
}

void RunningCovariance::add(double x, double y) noexcept {
  ++n_;
  const double n = static_cast<double>(n_);
  const double dx = x - mx_;
  mx_ += dx / n;
  my_ += (y - my_) / n;
  cxy_ += dx * (y - my_);
}

double RunningCovariance::covariance() const noexcept {
  return n_ > 1 ? cxy_ / static_cast<double>(n_ - 1) : 0.0;
}

}  // namespace lfpp
