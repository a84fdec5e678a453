#include "lfpp/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "lfpp/error.hpp"
#include "lfpp/metric.hpp"
#include "lfpp/rng.hpp"
#include "lfpp/stats.hpp"

namespace lfpp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

// Axis offsets whose lengths (in units of the spacing) fall in [r_min, r_max].
std::vector<int> offsets_in_range(int k, double r_min, double r_max, int count) {
  const double n = std::ldexp(1.0, k);
  const int lo = static_cast<int>(std::ceil(r_min * n - 1e-9));
  const int hi = static_cast<int>(std::floor(r_max * n + 1e-9));
  std::vector<int> out;
  for (int i = 0; i < count; ++i) {
    const double r = r_min * std::pow(r_max / r_min, count == 1 ? 0.0 : double(i) / (count - 1));
    out.push_back(std::clamp(static_cast<int>(std::lround(r * n)), lo, hi));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  require(!out.empty() && lo <= hi, ErrorKind::domain, "no lattice offsets in the requested distance range");
  return out;
}

// Per-site sums and per-offset pair product sums over replicates, for pairs
// (x, x + s e_a) along every axis a.
class OffsetMoments {
 public:
  OffsetMoments(Lattice lattice, std::vector<int> offsets)
      : lattice_(std::move(lattice)),
        offsets_(std::move(offsets)),
        sum_(lattice_.size(), 0.0),
        sq_(lattice_.size(), 0.0),
        prod_(offsets_.size(), 0.0L) {}

  void add(std::span<const double> h) {
    require(h.size() == lattice_.size(), ErrorKind::incompatible_samples, "sample size does not match the lattice");
    for (std::size_t i = 0; i < h.size(); ++i) {
      sum_[i] += h[i];
      sq_[i] += h[i] * h[i];
    }
    for (std::size_t o = 0; o < offsets_.size(); ++o) {
      long double acc = 0.0L;
      for_each_pair(offsets_[o], [&](std::size_t x, std::size_t y) { acc += h[x] * h[y]; });
      prod_[o] += acc;
    }
    ++reps_;
  }

  int replicates() const noexcept { return reps_; }
  const std::vector<int>& offsets() const noexcept { return offsets_; }

  // Pair-averaged sample covariance at offset index o.
  double covariance(std::size_t o) const {
    const double r = reps_;
    long double cross = 0.0L;
    std::size_t pairs = 0;
    for_each_pair(offsets_[o], [&](std::size_t x, std::size_t y) {
      cross += sum_[x] * sum_[y];
      ++pairs;
    });
    return static_cast<double>((prod_[o] - cross / r) / (r - 1.0) / static_cast<long double>(pairs));
  }

  // Pair-averaged sample variance of h(x) - h(y) at offset index o.
  double increment_variance(std::size_t o) const {
    const double r = reps_;
    long double total = 0.0L;
    std::size_t pairs = 0;
    for_each_pair(offsets_[o], [&](std::size_t x, std::size_t y) {
      total += site_variance(x) + site_variance(y) - 2.0 * (-sum_[x] * sum_[y] / r) / (r - 1.0);
      ++pairs;
    });
    total -= 2.0L * prod_[o] / (r - 1.0);
    return static_cast<double>(total / static_cast<long double>(pairs));
  }

 private:
  double site_variance(std::size_t x) const {
    const double r = reps_;
    return (sq_[x] - sum_[x] * sum_[x] / r) / (r - 1.0);
  }

  template <class F>
  void for_each_pair(int s, F&& f) const {
    const int d = lattice_.dim();
    for (int a = 0; a < d; ++a) {
      const std::size_t step = lattice_.stride(a) * static_cast<std::size_t>(s);
      for (std::size_t x = 0; x < lattice_.size(); ++x) {
        if (lattice_.coord(x, a) + s < lattice_.side()) f(x, x + step);
      }
    }
  }

  Lattice lattice_;
  std::vector<int> offsets_;
  std::vector<double> sum_, sq_;
  std::vector<long double> prod_;
  int reps_ = 0;
};

FieldSpec spec_for(int d, int k, std::uint64_t seed, std::string_view job) {
  FieldSpec s;
  s.dim = d;
  s.scale_index = k;
  s.master_seed = seed;
  s.job_key = job_key(job);
  return s;
}

template <class F>
CheckResult timed(std::string id, std::string title, F&& body) {
  CheckResult c;
  c.id = std::move(id);
  c.title = std::move(title);
  const auto t0 = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.passed = false;
    c.summary = std::string("error: ") + e.what();
  }
  c.seconds = seconds_since(t0);
  return c;
}

bool same_xi(double a, double b) { return std::fabs(a - b) <= 1e-12; }

}  // namespace

Json to_json(const CheckResult& c) {
  return {{"id", c.id}, {"title", c.title}, {"passed", c.passed}, {"summary", c.summary}, {"data", c.data}};
}

std::vector<double> even_grid(double a, double b, int count) {
  require(count >= 2 && b > a, ErrorKind::domain, "grid needs two or more points on a nonempty interval");
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(i == count - 1 ? b : a + (b - a) * i / (count - 1));
  return out;
}

CheckResult check_field_variance(const std::vector<int>& dims, int k_min, int k_max, int replicates,
                                 std::uint64_t seed, const SamplerLimits& limits) {
  return timed("field-variance", "pointwise variance grows like log(1/e)", [&](CheckResult& c) {
    c.passed = true;
    std::string summary;
    for (int d : dims) {
      std::vector<FieldSpec> specs;
      for (int k = k_min; k <= k_max; ++k) specs.push_back(spec_for(d, k, seed, "variance/" + std::to_string(d)));
      const auto rows = variance_profile(specs, replicates, limits);
      std::vector<double> x, y;
      Json jr = Json::array();
      for (const auto& r : rows) {
        x.push_back(r.log_inverse_spacing);
        y.push_back(r.mean_variance);
        jr.push_back({{"k", r.scale_index}, {"log_inverse_spacing", r.log_inverse_spacing},
                      {"mean_variance", r.mean_variance}});
      }
      const LineFit fit = fit_line(x, y);
      const bool ok = fit.slope >= 0.9 && fit.slope <= 1.1;
      c.passed = c.passed && ok;
      c.data.push_back({{"d", d}, {"rows", jr}, {"slope", fit.slope}, {"slope_stderr", fit.slope_stderr}, {"passed", ok}});
      summary += (summary.empty() ? "" : ", ") + ("d=" + std::to_string(d) + " slope " + fixed(fit.slope));
    }
    c.summary = summary + " (window [0.9, 1.1])";
  });
}

CheckResult check_field_covariance(int d, int k, int replicates, double r_min, double r_max, std::uint64_t seed,
                                   const SamplerLimits& limits) {
  return timed("field-covariance", "covariance grows like -log|x - y|", [&](CheckResult& c) {
    const FieldSpec base = spec_for(d, k, seed, "covariance/" + std::to_string(d));
    OffsetMoments acc(base.lattice(), offsets_in_range(k, r_min, r_max, 10));
    for (int r = 0; r < replicates; ++r) acc.add(sample_field(base.replicate(static_cast<std::uint64_t>(r)), limits).values());
    std::vector<double> x, y;
    Json rows = Json::array();
    for (std::size_t o = 0; o < acc.offsets().size(); ++o) {
      const double dist = std::ldexp(static_cast<double>(acc.offsets()[o]), -k);
      x.push_back(-std::log(dist));
      y.push_back(acc.covariance(o));
      rows.push_back({{"distance", dist}, {"covariance", y.back()}});
    }
    const LineFit fit = fit_line(x, y);
    c.passed = fit.slope >= 0.85 && fit.slope <= 1.15;
    c.data = {{"d", d}, {"k", k}, {"replicates", replicates}, {"rows", rows}, {"slope", fit.slope},
              {"slope_stderr", fit.slope_stderr}};
    c.summary = "slope " + fixed(fit.slope) + " over " + std::to_string(x.size()) + " distances (window [0.85, 1.15])";
  });
}

CheckResult check_restriction(int k, int replicates, double r_min, double r_max, std::uint64_t seed,
                              const SamplerLimits& limits) {
  return timed("restriction", "3d slice matches the native 2d field", [&](CheckResult& c) {
    const auto offsets = offsets_in_range(k, r_min, r_max, 8);
    const FieldSpec s3 = spec_for(3, k, seed, "restriction/3");
    const FieldSpec s2 = spec_for(2, k, seed, "restriction/2");
    OffsetMoments slice(s2.lattice(), offsets), native(s2.lattice(), offsets);
    for (int r = 0; r < replicates; ++r) {
      const auto ru = static_cast<std::uint64_t>(r);
      slice.add(restrict_to_hyperplane(sample_field(s3.replicate(ru), limits)).values());
      native.add(sample_field(s2.replicate(ru), limits).values());
    }
    double worst = 0.0;
    Json rows = Json::array();
    for (std::size_t o = 0; o < offsets.size(); ++o) {
      const double a = slice.increment_variance(o), b = native.increment_variance(o);
      worst = std::max(worst, std::fabs(a - b));
      rows.push_back({{"distance", std::ldexp(static_cast<double>(offsets[o]), -k)},
                      {"slice", a},
                      {"native", b}});
    }
    c.passed = worst <= 1.0;
    c.data = {{"k", k}, {"replicates", replicates}, {"rows", rows}, {"max_abs_difference", worst}};
    c.summary = "max |difference| " + fixed(worst) + " over " + std::to_string(offsets.size()) +
                " distances (tolerance 1.0)";
  });
}

CheckResult check_metric_oracle(int instances, std::uint64_t seed) {
  return timed("metric-oracle", "Dijkstra agrees with exhaustive search", [&](CheckResult& c) {
    double worst = 0.0;
    int checked = 0;
    for (int side : {3, 4}) {
      const int k = side == 3 ? 1 : 2;
      const Lattice lat = Lattice::dyadic(2, k);
      for (int i = 0; i < instances; ++i) {
        Engine eng = make_stream(seed, job_key("oracle/" + std::to_string(side)), static_cast<std::uint64_t>(i));
        boost::random::normal_distribution<double> normal;
        boost::random::uniform_real_distribution<double> unit(0.0, 2.0);
        const double xi = unit(eng);
        std::vector<double> w(lat.size());
        for (double& v : w) v = lat.spacing() * std::exp(xi * normal(eng));
        const auto weights = VertexWeights::from_values(lat, std::move(w));

        const int off_hi = lat.side() - side;
        boost::random::uniform_int_distribution<int> off(0, off_hi);
        const std::array<int, 2> lo{off(eng), off(eng)};
        const std::array<int, 2> hi{lo[0] + side - 1, lo[1] + side - 1};
        const GridRegion region = GridRegion::box(lat, lo, hi);

        DistanceQuery q = crossing_query(region);
        if (i % 2 == 1) {
          // Random disjoint source and target sets.
          auto sites = region.sites();
          for (std::size_t j = sites.size(); j > 1; --j) {
            boost::random::uniform_int_distribution<std::size_t> pick(0, j - 1);
            std::swap(sites[j - 1], sites[pick(eng)]);
          }
          boost::random::uniform_int_distribution<int> count(1, 3);
          const int ns = count(eng), nt = count(eng);
          q.sources.assign(sites.begin(), sites.begin() + ns);
          q.targets.assign(sites.begin() + ns, sites.begin() + ns + nt);
          std::sort(q.sources.begin(), q.sources.end());
          std::sort(q.targets.begin(), q.targets.end());
        }
        const Geodesic g = set_to_set_distance(q, weights);
        const double brute = brute_force_distance(q, weights);
        worst = std::max({worst, std::fabs(g.distance - brute), std::fabs(path_length(g.path, weights) - g.distance)});
        ++checked;
      }
    }
    c.passed = worst <= 1e-12;
    c.data = {{"instances", checked}, {"max_abs_difference", worst}};
    c.summary = std::to_string(checked) + " instances, max |difference| " + sci(worst) + " (tolerance 1e-12)";
  });
}

CheckResult check_flat_exactness(const std::vector<int>& dims, int k_min, int k_max) {
  return timed("flat-exact", "flat crossing distance is 1 + e", [&](CheckResult& c) {
    double worst = 0.0;
    Json rows = Json::array();
    for (int d : dims) {
      for (int k = k_min; k <= k_max; ++k) {
        const Lattice lat = Lattice::dyadic(d, k);
        const double dist = set_to_set_distance(crossing_query(lat), VertexWeights::flat(lat)).distance;
        const double err = std::fabs(dist - (1.0 + lat.spacing()));
        worst = std::max(worst, err);
        rows.push_back({{"d", d}, {"k", k}, {"distance", dist}, {"abs_error", err}});
      }
    }
    c.passed = worst <= 1e-12;
    c.data = {{"rows", rows}, {"max_abs_error", worst}};
    c.summary = std::to_string(rows.size()) + " lattices, max |D - (1 + e)| " + sci(worst);
  });
}

const ExponentEstimate& Campaign::at(int d, double xi) const {
  for (const auto& [key, est] : estimates) {
    if (key.first == d && same_xi(key.second, xi)) return est;
  }
  fail(ErrorKind::domain, "no estimate for d = " + std::to_string(d) + ", xi = " + format_double(xi));
}

Campaign run_campaign(std::vector<ExperimentPlan> plans, int workers, const std::filesystem::path& store) {
  Campaign c;
  c.plans = std::move(plans);
  std::optional<RecordStore> st;
  if (!store.empty()) st.emplace(store);
  std::vector<ResultRecord> memory;
  for (const auto& plan : c.plans) {
    const auto t0 = Clock::now();
    const PlanOutcome out = run_plan(
        plan, workers, [&](const RecordKey& key) { return st && st->contains(key); },
        [&](const ResultRecord& r) {
          if (st) {
            st->append(r);
          } else {
            memory.push_back(r);
          }
        });
    c.seconds_by_dim[plan.dim] += seconds_since(t0);
    c.failures.insert(c.failures.end(), out.failures.begin(), out.failures.end());
  }
  c.records = st ? st->records() : memory;
  sort_records(c.records);
  for (const auto& plan : c.plans) {
    for (double xi : plan.xi_grid) c.estimates[{plan.dim, xi}] = estimate_lambda(c.records, plan, xi);
  }
  return c;
}

CheckResult check_known_value(const Campaign& c, double lo, double hi) {
  return timed("lambda-2d-known", "two-dimensional exponent at xi = 1/sqrt(6)", [&](CheckResult& r) {
    const auto& e = c.at(2, 1.0 / std::sqrt(6.0));
    r.passed = e.lambda_hat >= lo && e.lambda_hat <= hi;
    r.data = to_json(e);
    r.summary = "lambda_hat " + fixed(e.lambda_hat) + " +- " + fixed(e.std_error) + " in [" + fixed(lo, 2) + ", " +
                fixed(hi, 2) + "]";
  });
}

CheckResult check_zero_exponent(const Campaign& c) {
  return timed("lambda-zero", "exponent at xi = 0 is exactly zero", [&](CheckResult& r) {
    r.passed = true;
    int n = 0;
    for (const auto& [key, e] : c.estimates) {
      if (key.second != 0.0) continue;
      ++n;
      r.passed = r.passed && e.lambda_hat == 0.0;
      r.data.push_back({{"d", key.first}, {"lambda_hat", e.lambda_hat}});
    }
    r.passed = r.passed && n > 0;
    r.summary = std::to_string(n) + " zero-xi estimates" + (r.passed ? ", all exactly 0" : ", not all exactly 0");
  });
}

CheckResult check_brackets(const Campaign& c, const std::vector<int>& dims, const std::vector<double>& xis,
                           double allowance) {
  return timed("bracket", "estimates sit inside the bounds", [&](CheckResult& r) {
    r.passed = true;
    int bad = 0;
    for (int d : dims) {
      for (double xi : xis) {
        const BracketReport b = check_bracket(c.at(d, xi), allowance);
        r.passed = r.passed && b.passed;
        bad += b.passed ? 0 : 1;
        r.data.push_back(to_json(b));
      }
    }
    r.summary = std::to_string(r.data.size() - static_cast<std::size_t>(bad)) + "/" + std::to_string(r.data.size()) +
                " estimates within bounds +- " + fixed(allowance, 2);
  });
}

CheckResult check_dimension_monotone(const Campaign& c, int d_low, int d_high, const std::vector<double>& xis) {
  return timed("dim-monotone", "exponent does not decrease with dimension", [&](CheckResult& r) {
    r.passed = true;
    std::string s;
    for (double xi : xis) {
      const MonotoneReport m = check_monotone_in_dimension(c.at(d_low, xi), c.at(d_high, xi));
      r.passed = r.passed && m.passed;
      r.data.push_back(to_json(m));
      s += (s.empty() ? "" : ", ") + ("xi " + fixed(xi, 3) + ": " + fixed(m.lambda_low) + " -> " + fixed(m.lambda_high));
    }
    r.summary = s;
  });
}

CheckResult check_inequality_audit(const Campaign& c, int d, const std::vector<double>& xis) {
  return timed("diff-inequalities", "derivative bounds hold; synthetic violations are flagged", [&](CheckResult& r) {
    std::vector<ExponentEstimate> ests;
    for (double xi : xis) ests.push_back(c.at(d, xi));
    const auto ders = estimate_derivative(ests);
    bool real_ok = true;
    Json real = Json::array();
    for (const auto& der : ders) {
      const auto it = std::find_if(ests.begin(), ests.end(), [&](const auto& e) { return same_xi(e.xi, der.xi); });
      InequalityReport rep = check_differential_inequalities(*it, der, d);
      real_ok = real_ok && rep.passed();
      Json j = to_json(rep);
      j["derivative"] = to_json(der);
      real.push_back(j);
    }
    const LipschitzReport lip = check_lipschitz(ests, d);

    // Negative controls: each must come back flagged.
    const auto synthetic = [&](double xi, double lam, double lam_se) {
      ExponentEstimate e;
      e.dim = d;
      e.xi = xi;
      e.lambda_hat = lam;
      e.std_error = lam_se;
      return e;
    };
    const auto derivative = [](double xi, double v, double se) {
      DerivativeEstimate der;
      der.xi = xi;
      der.lambda_prime_hat = v;
      der.std_error = se;
      return der;
    };
    const auto e0 = synthetic(0.4, 0.15, 0.01);
    const auto probe = check_differential_inequalities(e0, derivative(0.4, 0.0, 0.02), d);
    struct Control {
      std::string name;
      bool flagged;
    };
    std::vector<Control> controls;
    {
      const auto rep = check_differential_inequalities(e0, derivative(0.4, probe.lower_bound - 0.5, 0.02), d);
      controls.push_back({"slope far below the lower bound", rep.lower_verdict == Verdict::contradiction});
    }
    {
      const auto rep = check_differential_inequalities(e0, derivative(0.4, probe.upper_bound + 1.0, 0.02), d);
      controls.push_back({"slope far above the upper bound", rep.upper_verdict == Verdict::contradiction});
    }
    {
      const double v = probe.upper_bound + 3.0 * 0.02;
      const auto rep = check_differential_inequalities(e0, derivative(0.4, v, 0.02), d);
      controls.push_back({"slope three sigma above the upper bound", rep.upper_verdict == Verdict::violation});
    }
    {
      const std::vector<ExponentEstimate> jump{synthetic(0.3, 0.05, 0.01), synthetic(0.35, 0.6, 0.01)};
      controls.push_back({"Lipschitz jump", !check_lipschitz(jump, d).passed});
    }
    {
      const std::vector<ExponentEstimate> drop{synthetic(0.3, 0.2, 0.01), synthetic(0.35, 0.1, 0.01)};
      controls.push_back({"decrease in xi", !check_monotone_in_xi(drop).passed});
    }
    bool controls_ok = true;
    Json jc = Json::array();
    for (const auto& ctl : controls) {
      controls_ok = controls_ok && ctl.flagged;
      jc.push_back({{"control", ctl.name}, {"flagged", ctl.flagged}});
    }
    r.passed = real_ok && controls_ok;
    r.data = {{"d", d}, {"interior_points", real}, {"lipschitz", to_json(lip)}, {"negative_controls", jc}};
    int ok = 0;
    for (const auto& j : real) ok += j["passed"].get<bool>() ? 1 : 0;
    int flagged = 0;
    for (const auto& ctl : controls) flagged += ctl.flagged ? 1 : 0;
    r.summary = std::to_string(ok) + "/" + std::to_string(real.size()) + " interior points pass, " +
                std::to_string(flagged) + "/" + std::to_string(controls.size()) + " negative controls flagged";
  });
}

CheckResult check_thick_points(const std::vector<int>& dims, double alpha, int k_min, int k_max, int replicates,
                               std::uint64_t seed, const SamplerLimits& limits, int workers, double tolerance) {
  return timed("thick-points", "thick-point counts scale with d - alpha^2/2", [&](CheckResult& c) {
    c.passed = true;
    CellOptions opts;
    opts.limits = limits;
    std::string s;
    for (int d : dims) {
      const ThickPointReport rep = thick_point_scan(d, alpha, k_min, k_max, replicates, seed, opts, workers);
      const bool ok = std::fabs(rep.fitted_exponent - rep.expected_exponent) <= tolerance;
      c.passed = c.passed && ok;
      Json j = to_json(rep);
      j["passed"] = ok;
      c.data.push_back(j);
      s += (s.empty() ? "" : ", ") + ("d=" + std::to_string(d) + " exponent " + fixed(rep.fitted_exponent, 3) +
                                       " vs " + fixed(rep.expected_exponent, 3));
    }
    c.summary = s + " (tolerance " + fixed(tolerance, 2) + ")";
  });
}

CheckResult check_bound_algebra() {
  return timed("bound-algebra", "two-dimensional bound identities", [&](CheckResult& c) {
    const double b = 1.0 / std::sqrt(6.0);
    const double sixth = 1.0 / 6.0;
    const double at_lower = rho_lower_2d(b), at_upper = rho_upper_2d(b);
    double jump = 0.0;
    for (auto f : {rho_lower_2d, rho_upper_2d}) {
      jump = std::max({jump, std::fabs(f(std::nextafter(b, 0.0)) - f(b)), std::fabs(f(std::nextafter(b, 1.0)) - f(b))});
    }
    double worst_gap = std::numeric_limits<double>::infinity();
    int order_failures = 0;
    for (int i = 0; i <= 3000; ++i) {
      const double xi = i * 1e-3;
      const double gap = rho_upper_2d(xi) - rho_lower_2d(xi);
      worst_gap = std::min(worst_gap, gap);
      order_failures += gap < 0.0 ? 1 : 0;
      for (int d = 2; d <= 6; ++d) {
        const BoundReport r = lambda_bounds(d, xi);
        order_failures += r.lower > r.upper ? 1 : 0;
      }
    }
    const double err = std::max(std::fabs(at_lower - sixth), std::fabs(at_upper - sixth));
    c.passed = err <= 1e-12 && jump <= 1e-12 && order_failures == 0;
    c.data = {{"lower_at_branch", at_lower}, {"upper_at_branch", at_upper}, {"branch_error", err},
              {"branch_jump", jump},         {"min_gap", worst_gap},       {"order_failures", order_failures}};
    c.summary = "|rho(1/sqrt6) - 1/6| " + sci(err) + ", jump " + sci(jump) + ", " + std::to_string(order_failures) +
                " ordering failures";
  });
}

CheckResult check_d_gamma_solver() {
  return timed("dgamma-solver", "fractal dimension solver", [&](CheckResult& c) {
    const double closed = solve_d_gamma(1.0, 3, LambdaFunction::affine(0.5, -1.0)).d_gamma;
    const double closed_err = std::fabs(closed - 5.0);

    double edge_err = 0.0;
    Json edges = Json::array();
    for (int d : {3, 4, 5}) {
      for (double gamma : {0.5, 1.0, 1.5, 2.0}) {
        const double lo = solve_d_gamma(gamma, d, LambdaFunction::constant(0.0)).d_gamma;
        const double hi = solve_d_gamma(gamma, d, LambdaFunction::upper_bound(d)).d_gamma;
        const double lo_x = d + gamma * gamma / 2.0;
        const double hi_x = lo_x + gamma * std::sqrt(2.0 * d - 2.0);
        edge_err = std::max({edge_err, std::fabs(lo - lo_x), std::fabs(hi - hi_x)});
        edges.push_back({{"d", d}, {"gamma", gamma}, {"zero", lo}, {"upper", hi}});
      }
    }

    int monotone_failures = 0;
    int points = 0;
    Json mono = Json::array();
    for (int d : {3, 4}) {
      const auto lower = LambdaFunction::lower_bound(d), upper = LambdaFunction::upper_bound(d);
      const LambdaFunction mid("midpoint", [lower, upper](double xi) { return 0.5 * (lower(xi) + upper(xi)); });
      for (const LambdaFunction* lam : {&lower, &upper, &mid}) {
        double prev = -std::numeric_limits<double>::infinity();
        int fails = 0;
        const double top = std::sqrt(2.0 * d);
        for (int i = 1; 0.01 * i < top; ++i) {
          double v = std::numeric_limits<double>::quiet_NaN();
          try {
            v = solve_d_gamma(0.01 * i, d, *lam).d_gamma;
          } catch (const Error&) {
          }
          if (!(v > prev)) ++fails;
          if (std::isfinite(v)) prev = v;
          ++points;
        }
        monotone_failures += fails;
        mono.push_back({{"d", d}, {"lambda", lam->name()}, {"failures", fails}});
      }
    }
    c.passed = closed_err <= 1e-9 && edge_err <= 1e-8 && monotone_failures == 0;
    c.data = {{"closed_form", closed}, {"closed_form_error", closed_err}, {"edges", edges},
              {"edge_error", edge_err}, {"monotone", mono}};
    c.summary = "closed form " + fixed(closed, 10) + ", edge error " + sci(edge_err) + ", " +
                std::to_string(monotone_failures) + "/" + std::to_string(points) + " monotonicity failures";
  });
}

CheckResult check_store_corruption(const std::filesystem::path& scratch_dir) {
  return timed("store-checksum", "corrupted record store is rejected", [&](CheckResult& c) {
    namespace fs = std::filesystem;
    const fs::path dir = scratch_dir / "lfpp-store-check";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path csv = dir / "records.csv";
    {
      RecordStore st(csv);
      for (int i = 0; i < 3; ++i) st.append({2, 0.25, 4 + i, 11, -0.5 * i, 0.0});
    }
    // An interrupted append leaves an unacknowledged tail, which is dropped.
    {
      std::ofstream os(csv, std::ios::app | std::ios::binary);
      os << "2,0.25,9,1";
    }
    std::uintmax_t recovered = 0;
    std::size_t kept = 0;
    {
      RecordStore st(csv);
      recovered = st.recovered_bytes();
      kept = st.records().size();
    }
    // A flipped byte inside acknowledged content is corruption.
    {
      std::fstream fs(csv, std::ios::in | std::ios::out | std::ios::binary);
      fs.seekp(static_cast<std::streamoff>(kRecordHeader.size() + 3));
      fs.put('7');
    }
    std::string detected = "none";
    try {
      RecordStore st(csv);
    } catch (const Error& e) {
      detected = std::string(to_string(e.kind()));
    }
    fs::remove_all(dir);
    c.passed = recovered > 0 && kept == 3 && detected == "checksum-mismatch";
    c.data = {{"recovered_tail_bytes", recovered}, {"records_after_recovery", kept}, {"corruption_error", detected}};
    c.summary = "tail of " + std::to_string(recovered) + " bytes recovered, corruption reported as " + detected;
  });
}

namespace {

struct SuiteScale {
  std::vector<int> variance_dims{2, 3};
  int variance_k_min = 3, variance_k_max = 8, variance_reps = 200;
  int covariance_k = 8, covariance_reps = 2000;
  int restriction_k = 6, restriction_reps = 500;
  int oracle_instances = 100;
  int flat_k_max = 6;
  ExperimentPlan plan2, plan3;
  int thick_k_min = 4, thick_k_max = 8, thick_reps = 100;
};

const std::vector<double>& bracket_xis() {
  static const std::vector<double> xs{0.1, 0.25, 1.0 / std::sqrt(6.0), 0.6};
  return xs;
}

const std::vector<double>& audit_xis() {
  static const std::vector<double> xs{0.3, 0.35, 0.4, 0.45, 0.5};
  return xs;
}

SuiteScale suite_scale(bool quick, std::uint64_t seed) {
  SuiteScale s;
  const double b = 1.0 / std::sqrt(6.0);
  s.plan2.dim = 2;
  s.plan2.xi_grid = {0.0, 0.1, 0.25, 0.3, 0.35, 0.4, b, 0.45, 0.5, 0.6};
  s.plan2.master_seed = seed;
  s.plan3.dim = 3;
  s.plan3.xi_grid = {0.1, 0.25, b, 0.6};
  s.plan3.master_seed = seed;
  if (quick) {
    s.variance_k_max = 6;
    s.variance_reps = 100;
    s.covariance_k = 7;
    s.covariance_reps = 300;
    s.restriction_k = 5;
    s.restriction_reps = 100;
    s.flat_k_max = 4;
    s.plan2.k_min = 4;
    s.plan2.k_max = 8;
    s.plan2.replicates = 12;
    s.plan3.k_min = 3;
    s.plan3.k_max = 6;
    s.plan3.replicates = 12;
    s.thick_k_max = 7;
    s.thick_reps = 15;
  } else {
    s.plan2.k_min = 5;
    s.plan2.k_max = 9;
    s.plan2.replicates = 20;
    s.plan3.k_min = 4;
    s.plan3.k_max = 8;
    s.plan3.replicates = 20;
  }
  return s;
}

}  // namespace

std::vector<CheckResult> run_verify(const VerifyOptions& options, std::ostream& log) {
  require(options.workers >= 1, ErrorKind::usage, "worker count must be >= 1");
  const SuiteScale s = suite_scale(options.quick, options.seed);
  SamplerLimits limits;
  limits.memory_cap_bytes = options.memory_cap;
  const auto wanted = [&](std::string_view id) {
    return options.only.empty() || std::find(options.only.begin(), options.only.end(), id) != options.only.end();
  };
  const auto sub = [&](std::string_view name) { return combine(options.seed, job_key(name)); };

  std::vector<CheckResult> results;
  const auto add = [&](CheckResult c) {
    log << (c.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(18) << c.id << c.summary << "  ["
        << fixed(c.seconds, 1) << " s]\n"
        << std::flush;
    results.push_back(std::move(c));
  };

  if (wanted("bound-algebra")) add(check_bound_algebra());
  if (wanted("dgamma-solver")) add(check_d_gamma_solver());
  if (wanted("metric-oracle")) add(check_metric_oracle(s.oracle_instances, sub("oracle")));
  if (wanted("flat-exact")) add(check_flat_exactness({2, 3, 4}, 2, s.flat_k_max));
  if (wanted("field-variance")) {
    add(check_field_variance(s.variance_dims, s.variance_k_min, s.variance_k_max, s.variance_reps, sub("variance"),
                             limits));
  }
  if (wanted("field-covariance")) {
    add(check_field_covariance(2, s.covariance_k, s.covariance_reps, 0.05, 0.3, sub("covariance"), limits));
  }
  if (wanted("restriction")) add(check_restriction(s.restriction_k, s.restriction_reps, 0.1, 0.4, sub("restriction"), limits));
  if (wanted("thick-points")) {
    add(check_thick_points({2, 3}, 1.0, s.thick_k_min, s.thick_k_max, s.thick_reps, sub("thick"), limits,
                           options.workers, 0.3));
  }

  static const std::vector<std::string> campaign_ids{"lambda-zero", "lambda-2d-known", "bracket", "dim-monotone",
                                                     "diff-inequalities"};
  const bool need_campaign =
      std::any_of(campaign_ids.begin(), campaign_ids.end(), [&](const std::string& id) { return wanted(id); });
  std::optional<Campaign> campaign;
  if (need_campaign) {
    std::vector<ExperimentPlan> plans{s.plan2, s.plan3};
    for (auto& p : plans) p.cell.limits = limits;
    const auto t0 = Clock::now();
    campaign = run_campaign(plans, options.workers, options.out.empty() ? "" : options.out / "records.csv");
    log << "      campaign: " << campaign->records.size() << " records, " << campaign->failures.size()
        << " failed jobs  [" << fixed(seconds_since(t0), 1) << " s]\n";
    if (!campaign->failures.empty()) {
      CheckResult c;
      c.id = "campaign-jobs";
      c.title = "every estimation job completed";
      c.summary = std::to_string(campaign->failures.size()) + " jobs failed";
      for (const auto& f : campaign->failures) c.data.push_back(to_json(f));
      add(std::move(c));
    }
    if (wanted("lambda-zero")) add(check_zero_exponent(*campaign));
    if (wanted("lambda-2d-known")) add(check_known_value(*campaign, 0.08, 0.28));
    if (wanted("bracket")) add(check_brackets(*campaign, {2, 3}, bracket_xis(), 0.1));
    if (wanted("dim-monotone")) add(check_dimension_monotone(*campaign, 2, 3, {0.25, 1.0 / std::sqrt(6.0)}));
    if (wanted("diff-inequalities")) add(check_inequality_audit(*campaign, 2, audit_xis()));
  }
  if (wanted("store-checksum")) {
    add(check_store_corruption(options.out.empty() ? std::filesystem::temp_directory_path() : options.out));
  }

  if (!options.out.empty()) {
    Json checks = Json::array();
    for (const auto& c : results) checks.push_back(to_json(c));
    write_json(options.out / "verify.json", {{"quick", options.quick}, {"seed", options.seed}, {"checks", checks}});
    if (campaign) {
      Json est = Json::array();
      for (const auto& [key, e] : campaign->estimates) est.push_back(to_json(e));
      write_json(options.out / "estimates.json", est);
    }
  }
  return results;
}

}  // namespace lfpp
