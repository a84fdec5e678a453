#include "lfpp/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "lfpp/error.hpp"
#include "lfpp/records.hpp"

namespace lfpp {
namespace {

double inv_sqrt6() { return 1.0 / std::sqrt(6.0); }
// Slope and offset of the linear branch shared by both 2D bounds.
double linear_slope() { return std::sqrt(2.5) - 1.0 / std::sqrt(6.0); }
double linear_offset() { return (std::sqrt(15.0) - 2.0) / 6.0; }

void check_xi(double xi) {
  require(std::isfinite(xi) && xi >= 0.0, ErrorKind::domain, "xi must be finite and >= 0, got " + format_double(xi));
}

void check_gamma(int d, double gamma) {
  require(gamma > 0.0 && gamma < std::sqrt(2.0 * d), ErrorKind::domain,
          "gamma must lie in (0, sqrt(2d)) = (0, " + format_double(std::sqrt(2.0 * d)) + "), got " +
              format_double(gamma));
}

template <class F>
double bisect(F&& f, double lo, double hi, double flo) {
  for (int i = 0; i < 400 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double rho_lower_2d(double xi) {
  check_xi(xi);
  if (xi <= inv_sqrt6()) return std::max(linear_slope() * xi - linear_offset(), 0.0);
  return std::max(0.25 - 0.5 * xi * xi, 0.0);
}

double rho_upper_2d(double xi) {
  check_xi(xi);
  if (xi <= inv_sqrt6()) return std::min(0.25 - 0.5 * xi * xi, std::sqrt(2.0) * xi);
  return std::min(linear_slope() * xi - linear_offset(), 1.0);
}

BoundReport lambda_bounds(int d, double xi) {
  require(d >= 2, ErrorKind::domain, "lambda bounds need d >= 2, got " + std::to_string(d));
  check_xi(xi);
  BoundReport r;
  r.dim = d;
  r.parameter = "xi";
  r.value = xi;
  r.lower = rho_lower_2d(xi);
  r.lower_label = "rho_lower";
  const bool left = xi <= inv_sqrt6();
  r.branches.emplace_back(left ? "rho_lower.linear" : "rho_lower.quadratic",
                          left ? linear_slope() * xi - linear_offset() : 0.25 - 0.5 * xi * xi);
  if (d == 2) {
    r.upper = rho_upper_2d(xi);
    r.upper_label = "rho_upper";
    if (left) {
      r.branches.emplace_back("rho_upper.quadratic", 0.25 - 0.5 * xi * xi);
      r.branches.emplace_back("rho_upper.sqrt2_xi", std::sqrt(2.0) * xi);
    } else {
      r.branches.emplace_back("rho_upper.linear", linear_slope() * xi - linear_offset());
      r.branches.emplace_back("rho_upper.one", 1.0);
    }
  } else {
    r.upper = xi * std::sqrt(2.0 * d - 2.0);
    r.upper_label = "xi*sqrt(2d-2)";
    r.branches.emplace_back("xi*sqrt(2d-2)", r.upper);
  }
  return r;
}

HighDimBound highdim_lower(double A, double xi) {
  require(A > 0.0 && std::isfinite(A), ErrorKind::domain, "A must be positive");
  check_xi(xi);
  HighDimBound b;
  b.A = A;
  b.xi = xi;
  b.value = A * xi - 1.0 / A;
  b.display = std::max(b.value, rho_lower_2d(xi));
  b.validity = "valid only for d >= C(A); C(A) is not specified";
  return b;
}

double q_hat(double lambda, double xi) {
  require(xi != 0.0, ErrorKind::excluded_point, "q_hat is undefined at xi = 0");
  require(xi > 0.0 && std::isfinite(xi), ErrorKind::domain, "q_hat needs xi > 0");
  return (1.0 - lambda) / xi;
}

LambdaFunction::LambdaFunction(std::string name, Fn fn, double xi_min, double xi_max)
    : name_(std::move(name)), fn_(std::move(fn)), xi_min_(xi_min), xi_max_(xi_max) {
  require(static_cast<bool>(fn_), ErrorKind::domain, "empty lambda function");
  require(xi_min <= xi_max, ErrorKind::domain, "empty lambda domain");
}

LambdaFunction LambdaFunction::lower_bound(int d) {
  require(d >= 2, ErrorKind::domain, "d must be >= 2");
  return LambdaFunction("rho_lower", [](double xi) { return rho_lower_2d(xi); });
}

LambdaFunction LambdaFunction::upper_bound(int d) {
  require(d >= 2, ErrorKind::domain, "d must be >= 2");
  if (d == 2) return LambdaFunction("rho_upper", [](double xi) { return rho_upper_2d(xi); });
  const double c = std::sqrt(2.0 * d - 2.0);
  return LambdaFunction("xi*sqrt(2d-2)", [c](double xi) { return c * xi; });
}

LambdaFunction LambdaFunction::constant(double c) {
  return LambdaFunction("constant " + format_double(c), [c](double) { return c; });
}

LambdaFunction LambdaFunction::affine(double intercept, double slope) {
  return LambdaFunction("affine " + format_double(intercept) + " + " + format_double(slope) + " xi",
                        [intercept, slope](double xi) { return intercept + slope * xi; });
}

LambdaFunction LambdaFunction::table(std::vector<double> xs, std::vector<double> ys, std::string name) {
  require(xs.size() == ys.size() && xs.size() >= 2, ErrorKind::domain, "table needs >= 2 matching knots");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(std::isfinite(xs[i]) && std::isfinite(ys[i]), ErrorKind::domain, "table knots must be finite");
    if (i > 0) require(xs[i] > xs[i - 1], ErrorKind::domain, "table knots must increase strictly");
  }
  const double lo = xs.front(), hi = xs.back();
  return LambdaFunction(
      std::move(name),
      [xs = std::move(xs), ys = std::move(ys)](double xi) {
        const auto it = std::upper_bound(xs.begin(), xs.end(), xi);
        if (it == xs.end()) return ys.back();
        if (it == xs.begin()) return ys.front();
        const std::size_t i = static_cast<std::size_t>(it - xs.begin());
        const double t = (xi - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return ys[i - 1] + t * (ys[i] - ys[i - 1]);
      },
      lo, hi);
}

LambdaFunction LambdaFunction::from_estimates(int d, std::vector<double> xs, std::vector<double> ys) {
  require(xs.size() == ys.size() && !xs.empty(), ErrorKind::domain, "estimates need matching knots");
  if (xs.front() > 0.0) {
    xs.insert(xs.begin(), 0.0);
    ys.insert(ys.begin(), 0.0);
  }
  auto interp = table(std::move(xs), std::move(ys), "estimates");
  const auto lo = lower_bound(d), hi = upper_bound(d);
  const double xmin = interp.xi_min(), xmax = interp.xi_max();
  return LambdaFunction(
      "estimates (clamped)",
      [interp = std::move(interp), lo, hi](double xi) { return std::clamp(interp(xi), lo(xi), hi(xi)); }, xmin,
      xmax);
}

double LambdaFunction::operator()(double xi) const {
  require(xi >= xi_min_ && xi <= xi_max_, ErrorKind::domain,
          name_ + " is not defined at xi = " + format_double(xi));
  const double v = fn_(xi);
  require(std::isfinite(v), ErrorKind::domain, name_ + " is not finite at xi = " + format_double(xi));
  return v;
}

DimensionSolution solve_d_gamma(double gamma, int d, const LambdaFunction& lam) {
  require(d >= 2, ErrorKind::domain, "d must be >= 2");
  check_gamma(d, gamma);
  const double Q = d / gamma + gamma / 2.0;
  auto F = [&](double m) { return lam(gamma / m) - 1.0 + (gamma / m) * Q; };

  const double upper_edge = d + gamma * gamma / 2.0 + gamma * std::sqrt(2.0 * d - 2.0);
  double lo = d, hi = upper_edge + 1.0;
  bool widened = false;
  double flo = F(lo), fhi = F(hi);
  if ((flo < 0.0) == (fhi < 0.0) && flo != 0.0 && fhi != 0.0) {
    widened = true;
    lo = d / 2.0;
    hi = 2.0 * (upper_edge + 1.0);
    flo = F(lo);
    fhi = F(hi);
    if ((flo < 0.0) == (fhi < 0.0) && flo != 0.0 && fhi != 0.0) {
      fail(ErrorKind::inconsistent_lambda, lam.name() + " gives no root for gamma = " + format_double(gamma) +
                                               ", d = " + std::to_string(d));
    }
  }
  double m;
  if (flo == 0.0) {
    m = lo;
  } else if (fhi == 0.0) {
    m = hi;
  } else {
    m = bisect(F, lo, hi, flo);
  }
  DimensionSolution s;
  s.gamma = gamma;
  s.dim = d;
  s.d_gamma = m;
  s.xi = gamma / m;
  s.Q = Q;
  s.residual = std::fabs(F(m));
  s.widened = widened;
  require(s.residual <= 1e-9, ErrorKind::inconsistent_lambda,
          lam.name() + " is discontinuous near the root; residual " + format_double(s.residual));
  return s;
}

BoundReport d_gamma_bounds(int d, double gamma) {
  require(d >= 3, ErrorKind::domain, "d_gamma bounds need d >= 3, got " + std::to_string(d));
  check_gamma(d, gamma);
  BoundReport r;
  r.dim = d;
  r.parameter = "gamma";
  r.value = gamma;
  const double base = d + gamma * gamma / 2.0;
  const double scaled = 6.0 / (std::sqrt(15.0) + 4.0) * (base + (std::sqrt(2.5) - std::sqrt(1.0 / 6.0)) * gamma);
  r.branches.emplace_back("d+gamma^2/2", base);
  r.branches.emplace_back("6/(sqrt15+4)*(d+gamma^2/2+(sqrt(5/2)-sqrt(1/6))gamma)", scaled);
  r.lower = std::max(base, scaled);
  r.lower_label = scaled > base ? "rho_lower.linear" : "d+gamma^2/2";
  r.upper = base + gamma * std::sqrt(2.0 * d - 2.0);
  r.upper_label = "d+gamma^2/2+gamma*sqrt(2d-2)";
  r.branches.emplace_back(r.upper_label, r.upper);
  return r;
}

DGammaDerivativeReport d_gamma_derivative_check(const LambdaFunction& lam, int d, std::span<const double> xi_grid) {
  require(d >= 2, ErrorKind::domain, "d must be >= 2");
  require(xi_grid.size() >= 3, ErrorKind::underdetermined_fit, "need at least three grid points");
  const double root2d = std::sqrt(2.0 * d);
  std::vector<double> q(xi_grid.size());
  for (std::size_t i = 0; i < xi_grid.size(); ++i) {
    if (i > 0) require(xi_grid[i] > xi_grid[i - 1], ErrorKind::grid_spacing, "xi grid must increase");
    q[i] = q_hat(lam(xi_grid[i]), xi_grid[i]);
    require(q[i] > root2d, ErrorKind::outside_subcritical,
            "q_hat <= sqrt(2d) at xi = " + format_double(xi_grid[i]));
  }
  auto gamma_of = [&](double qh) { return qh - std::sqrt(qh * qh - 2.0 * d); };

  DGammaDerivativeReport rep;
  rep.dim = d;
  rep.lambda_name = lam.name();
  rep.all_positive = true;
  for (std::size_t i = 1; i + 1 < xi_grid.size(); ++i) {
    DGammaDerivativePoint p;
    p.xi = xi_grid[i];
    p.q_hat = q[i];
    p.q_hat_prime = (q[i + 1] - q[i - 1]) / (xi_grid[i + 1] - xi_grid[i - 1]);
    p.gamma = gamma_of(q[i]);
    p.d_gamma = p.gamma / p.xi;
    const double root = std::sqrt(q[i] * q[i] - 2.0 * d);
    p.formula = -(q[i] - root) / (p.xi * p.xi) * (1.0 + p.xi * p.q_hat_prime / root);
    const double dm = solve_d_gamma(gamma_of(q[i - 1]), d, lam).d_gamma;
    const double dp = solve_d_gamma(gamma_of(q[i + 1]), d, lam).d_gamma;
    p.finite_difference = (dp - dm) / (xi_grid[i + 1] - xi_grid[i - 1]);
    p.positive = p.formula > 0.0;
    p.near_critical = q[i] - root2d < 1e-3 * root2d;
    rep.all_positive = rep.all_positive && p.positive;
    rep.max_disagreement = std::max(rep.max_disagreement, std::fabs(p.formula - p.finite_difference));
    rep.points.push_back(p);
  }
  return rep;
}

double xi_c(int d, const LambdaFunction& lam) {
  require(d >= 2, ErrorKind::domain, "d must be >= 2");
  const double root2d = std::sqrt(2.0 * d);
  auto G = [&](double xi) { return q_hat(lam(xi), xi) - root2d; };
  const double start = std::max(lam.xi_min(), 1e-9);
  const double stop = std::min(lam.xi_max(), 10.0);
  require(start < stop, ErrorKind::bracket_failure, "empty search range for xi_c");
  double lo = start, glo = G(lo);
  require(glo > 0.0, ErrorKind::bracket_failure, lam.name() + ": q_hat <= sqrt(2d) already at xi = " + format_double(lo));
  const double step = 1e-3;
  for (int i = 1;; ++i) {
    const double hi = std::min(start + i * step, stop);
    const double ghi = G(hi);
    if (ghi <= 0.0) return ghi == 0.0 ? hi : bisect(G, lo, hi, glo);
    if (hi >= stop) break;
    lo = hi;
    glo = ghi;
  }
  fail(ErrorKind::bracket_failure, lam.name() + ": q_hat does not cross sqrt(2d) on (0, " + format_double(stop) + "]");
}

Interval xi_c_bracket(int d, const LambdaFunction& lam_lower, const LambdaFunction& lam_upper) {
  Interval iv{xi_c(d, lam_upper), xi_c(d, lam_lower)};
  require(iv.lo <= iv.hi, ErrorKind::bracket_failure, "lambda functions do not bracket: upper crosses after lower");
  return iv;
}

std::vector<double> grid_points(double from, double to, double step) {
  require(step > 0.0 && from <= to, ErrorKind::domain, "grid needs step > 0 and from <= to");
  std::vector<double> out;
  const auto first = static_cast<long long>(std::ceil(from / step - 1e-9));
  for (long long i = first;; ++i) {
    const double x = static_cast<double>(i) * step;
    if (x > to + 1e-12 * std::max(1.0, std::fabs(to))) break;
    out.push_back(x);
  }
  return out;
}

std::vector<FigureRow> lambda_figure(int d, double xi_from, double xi_to, double step) {
  std::vector<FigureRow> rows;
  for (double xi : grid_points(xi_from, xi_to, step)) {
    const BoundReport b = lambda_bounds(d, xi);
    rows.push_back({xi, b.lower, b.upper});
  }
  return rows;
}

std::vector<FigureRow> d_gamma_figure(int d, double step) {
  std::vector<FigureRow> rows;
  const double top = std::sqrt(2.0 * d);
  for (double g : grid_points(step, top, step)) {
    if (g <= 0.0 || g >= top) continue;
    const BoundReport b = d_gamma_bounds(d, g);
    rows.push_back({g, b.lower, b.upper});
  }
  return rows;
}

void write_figure_csv(std::ostream& os, const std::string& x_name, const std::vector<FigureRow>& rows) {
  os << x_name << ",lower,upper\n";
  for (const auto& r : rows) os << format_double(r.x) << ',' << format_double(r.lower) << ',' << format_double(r.upper) << '\n';
}

}  // namespace lfpp
