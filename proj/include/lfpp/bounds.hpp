#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lfpp {

/// Best known two-dimensional bounds on lambda(2, xi); branch switch at 1/sqrt(6).
double rho_lower_2d(double xi);
double rho_upper_2d(double xi);

struct BoundReport {
  int dim = 0;
  std::string parameter;  // "xi" or "gamma"
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string lower_label;
  std::string upper_label;
  /// Every evaluated branch, in evaluation order.
  std::vector<std::pair<std::string, double>> branches;
};

/// lower = rho_lower; upper = rho_upper for d = 2, xi sqrt(2d - 2) for d >= 3.
BoundReport lambda_bounds(int d, double xi);

struct HighDimBound {
  double A = 0.0;
  double xi = 0.0;
  double value = 0.0;    // A xi - 1/A
  double display = 0.0;  // max(value, rho_lower(xi))
  std::string validity;
};

HighDimBound highdim_lower(double A, double xi);

/// (1 - lambda) / xi.
double q_hat(double lambda, double xi);

/// A map xi -> lambda on [xi_min, xi_max].
class LambdaFunction {
 public:
  using Fn = std::function<double(double)>;

  LambdaFunction(std::string name, Fn fn, double xi_min = 0.0,
                 double xi_max = std::numeric_limits<double>::infinity());

  /// rho_lower (every d >= 2).
  static LambdaFunction lower_bound(int d);
  /// rho_upper for d = 2, xi sqrt(2d - 2) for d >= 3.
  static LambdaFunction upper_bound(int d);
  static LambdaFunction constant(double c);
  /// intercept + slope * xi.
  static LambdaFunction affine(double intercept, double slope);
  /// Piecewise-linear interpolation of (xs, ys); xs strictly increasing.
  static LambdaFunction table(std::vector<double> xs, std::vector<double> ys, std::string name = "table");
  /// Interpolated estimates with the knot (0, 0) added when absent, clamped
  /// pointwise into [lower_bound(d), upper_bound(d)].
  static LambdaFunction from_estimates(int d, std::vector<double> xs, std::vector<double> ys);

  double operator()(double xi) const;
  const std::string& name() const noexcept { return name_; }
  double xi_min() const noexcept { return xi_min_; }
  double xi_max() const noexcept { return xi_max_; }

 private:
  std::string name_;
  Fn fn_;
  double xi_min_, xi_max_;
};

struct DimensionSolution {
  double gamma = 0.0;
  int dim = 0;
  double d_gamma = 0.0;
  double xi = 0.0;
  double Q = 0.0;
  double residual = 0.0;
  bool widened = false;
};

/// Root m of lam(gamma/m) - 1 + (gamma/m) Q by bisection.
DimensionSolution solve_d_gamma(double gamma, int d, const LambdaFunction& lam);

/// Closed-form bracket on d_gamma for d >= 3.
BoundReport d_gamma_bounds(int d, double gamma);

struct DGammaDerivativePoint {
  double xi = 0.0;
  double q_hat = 0.0;
  double q_hat_prime = 0.0;
  double gamma = 0.0;
  double d_gamma = 0.0;
  double formula = 0.0;            // two-factor expression
  double finite_difference = 0.0;  // from solve_d_gamma at neighbouring grid points
  bool positive = false;
  bool near_critical = false;  // q_hat within 1e-3 relative of sqrt(2d)
};

struct DGammaDerivativeReport {
  int dim = 0;
  std::string lambda_name;
  std::vector<DGammaDerivativePoint> points;
  bool all_positive = false;
  double max_disagreement = 0.0;
};

/// Evaluates d d_gamma / d xi at interior points of xi_grid.
DGammaDerivativeReport d_gamma_derivative_check(const LambdaFunction& lam, int d, std::span<const double> xi_grid);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Solves q_hat(lam(xi), xi) = sqrt(2d) by bisection.
double xi_c(int d, const LambdaFunction& lam);
/// [xi_c from lam_upper, xi_c from lam_lower].
Interval xi_c_bracket(int d, const LambdaFunction& lam_lower, const LambdaFunction& lam_upper);

struct FigureRow {
  double x = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Values i * step in [from, to].
std::vector<double> grid_points(double from, double to, double step);
std::vector<FigureRow> lambda_figure(int d, double xi_from, double xi_to, double step);
/// Open interval (0, sqrt(2d)) at the given step.
std::vector<FigureRow> d_gamma_figure(int d, double step);
void write_figure_csv(std::ostream& os, const std::string& x_name, const std::vector<FigureRow>& rows);

}  // namespace lfpp
