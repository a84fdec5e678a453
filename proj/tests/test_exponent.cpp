#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "lfpp/error.hpp"
#include "lfpp/exponent.hpp"

using namespace lfpp;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

ExponentEstimate synthetic(int d, double xi, double lambda, double se = 0.01) {
  ExponentEstimate e;
  e.dim = d;
  e.xi = xi;
  e.lambda_hat = lambda;
  e.std_error = se;
  return e;
}

// log D = flat + slope * log e + noise at every (k, replicate).
std::vector<ResultRecord> synthetic_records(gen::Gen& g, int d, double xi, double slope, double sigma, int kmin,
                                            int kmax, int reps) {
  std::vector<ResultRecord> out;
  for (int k = kmin; k <= kmax; ++k) {
    for (int r = 0; r < reps; ++r) {
      ResultRecord rec;
      rec.dim = d;
      rec.xi = xi;
      rec.scale_index = k;
      rec.seed = static_cast<std::uint64_t>(r);
      rec.log_distance = flat_log_distance(k) - slope * k * std::numbers::ln2 + g.normal(0.0, sigma);
      out.push_back(rec);
    }
  }
  return out;
}

const double kInvSqrt6 = 1.0 / std::sqrt(6.0);

}  // namespace

TEST_SUITE("exponent") {
  TEST_CASE("flat distance is exact and xi = 0 cells hit it") {
    for (int k = 1; k <= 10; ++k) CHECK(flat_log_distance(k) == doctest::Approx(std::log1p(std::ldexp(1.0, -k))).epsilon(1e-14));
    for (int k : {2, 3, 4}) {
      const ResultRecord r = run_cell(2, 0.0, k, 5, crossing_job_key(2, k));
      CHECK(r.log_distance == flat_log_distance(k));
    }
  }

  TEST_CASE("cells are deterministic and one field serves every xi") {
    const double xis[] = {0.1, 0.3};
    const auto a = run_replicate(2, xis, 5, 9, crossing_job_key(2, 5));
    const auto b = run_replicate(2, xis, 5, 9, crossing_job_key(2, 5));
    CHECK(a == b);
    CHECK(run_cell(2, 0.3, 5, 9, crossing_job_key(2, 5)) == a[1]);
    CHECK(a[1].log_distance > a[0].log_distance - 5.0);
  }

  TEST_CASE("estimator recovers a synthetic slope") {
    for (int c = 0; c < 10; ++c) {
      gen::Gen g("synthetic-slope", c);
      const auto recs = synthetic_records(g, 2, 0.3, 0.25, 0.05, 4, 10, 30);
      EstimatorOptions o;
      o.master_seed = static_cast<std::uint64_t>(c);
      const ExponentEstimate e = estimate_lambda(recs, 2, 0.3, o);
      CHECK(std::fabs(e.lambda_hat - 0.25) <= 0.02);
      CHECK(e.std_error > 0.0);
      CHECK(e.bootstrap_slopes.size() == 200);
    }
  }

  TEST_CASE("estimate at xi = 0 is zero") {
    gen::Gen g("zero", 0);
    const auto recs = synthetic_records(g, 3, 0.0, 0.0, 0.0, 3, 7, 5);
    const ExponentEstimate e = estimate_lambda(recs, 3, 0.0, EstimatorOptions{});
    CHECK(std::fabs(e.lambda_hat) <= 1e-12);
  }

  TEST_CASE("estimator guards") {
    gen::Gen g("guards", 0);
    const auto two = synthetic_records(g, 2, 0.3, 0.2, 0.05, 4, 5, 10);
    CHECK(kind_of([&] { estimate_lambda(two, 2, 0.3, EstimatorOptions{}); }) == ErrorKind::underdetermined_fit);
    const auto recs = synthetic_records(g, 2, 0.3, 0.2, 0.05, 4, 8, 10);
    EstimatorOptions bad;
    bad.quantile = 1.0;
    CHECK(kind_of([&] { estimate_lambda(recs, 2, 0.3, bad); }) == ErrorKind::domain);
    CHECK(kind_of([&] { estimate_lambda(recs, 2, -0.1, EstimatorOptions{}); }) == ErrorKind::domain);
  }

  TEST_CASE("derivatives of constant and linear estimates") {
    std::vector<ExponentEstimate> flat, lin;
    for (int i = 0; i < 6; ++i) {
      const double xi = 0.1 + 0.05 * i;
      flat.push_back(synthetic(2, xi, 0.3));
      lin.push_back(synthetic(2, xi, 0.7 * xi));
    }
    for (const auto& der : estimate_derivative(flat)) CHECK(der.lambda_prime_hat == doctest::Approx(0.0));
    const auto dl = estimate_derivative(lin);
    CHECK(dl.size() == 4);
    for (const auto& der : dl) CHECK(std::fabs(der.lambda_prime_hat - 0.7) <= 1e-12);
    lin[2].xi += 0.01;
    CHECK(kind_of([&] { estimate_derivative(lin); }) == ErrorKind::grid_spacing);
    CHECK(kind_of([&] { estimate_derivative(std::span(flat).first(2)); }) == ErrorKind::underdetermined_fit);
  }

  TEST_CASE("stderr of a difference grows as 1/spacing") {
    std::vector<ExponentEstimate> coarse, fine;
    for (int i = 0; i < 3; ++i) {
      coarse.push_back(synthetic(2, 0.1 + 0.2 * i, 0.1, 0.02));
      fine.push_back(synthetic(2, 0.1 + 0.1 * i, 0.1, 0.02));
    }
    CHECK(estimate_derivative(fine)[0].std_error == doctest::Approx(2 * estimate_derivative(coarse)[0].std_error));
  }

  TEST_CASE("inequality bounds at the known point") {
    DerivativeEstimate der;
    der.xi = kInvSqrt6;
    der.lambda_prime_hat = 0.5;
    const InequalityReport r = check_differential_inequalities(synthetic(2, kInvSqrt6, 1.0 / 6), der, 2);
    CHECK(r.lower_bound == doctest::Approx(-kInvSqrt6).epsilon(1e-12));
    CHECK(r.upper_bound == doctest::Approx(std::sqrt(2.5) - kInvSqrt6).epsilon(1e-12));
    CHECK(r.upper_bound == doctest::Approx(1.172890).epsilon(1e-6));
    CHECK(r.ratio_bound == doctest::Approx(-5 * kInvSqrt6).epsilon(1e-12));
    CHECK(r.passed());
  }

  TEST_CASE("lower bound is tight at lambda' = -xi") {
    DerivativeEstimate der;
    der.xi = 0.3;
    der.lambda_prime_hat = -0.3;
    const InequalityReport r = check_differential_inequalities(synthetic(3, 0.3, 0.8, 0.0), der, 3);
    CHECK(r.lower_margin == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.lower_verdict == Verdict::pass);
  }

  TEST_CASE("xi = 0 uses only the -xi bound") {
    DerivativeEstimate der;
    der.lambda_prime_hat = 0.1;
    const InequalityReport r = check_differential_inequalities(synthetic(2, 0.0, 0.0), der, 2);
    CHECK(r.ratio_excluded);
    CHECK(r.lower_bound == 0.0);
  }

  TEST_CASE("the upper-bound function satisfies the upper inequality") {
    for (int d = 2; d <= 6; ++d) {
      for (double xi = 0.0; xi * std::sqrt(2.0 * d - 2) <= 1.0; xi += 0.02) {
        DerivativeEstimate der;
        der.xi = xi;
        der.lambda_prime_hat = std::sqrt(2.0 * d - 2);
        const auto r = check_differential_inequalities(synthetic(d, xi, xi * std::sqrt(2.0 * d - 2), 0.0), der, d);
        CHECK(r.upper_margin >= -1e-12);
      }
    }
  }

  TEST_CASE("negative controls are flagged") {
    DerivativeEstimate der;
    der.xi = 0.4;
    der.lambda_prime_hat = -1.5;  // far below -xi
    der.std_error = 0.01;
    auto r = check_differential_inequalities(synthetic(2, 0.4, 0.2, 0.01), der, 2);
    CHECK(r.lower_verdict == Verdict::contradiction);
    der.lambda_prime_hat = 5.0;
    r = check_differential_inequalities(synthetic(2, 0.4, 0.2, 0.01), der, 2);
    CHECK(r.upper_verdict == Verdict::contradiction);
    CHECK_FALSE(r.passed());
  }

  TEST_CASE("verdict thresholds") {
    CHECK(classify_margin(0.5, 0.1) == Verdict::pass);
    CHECK(classify_margin(-0.2, 0.1) == Verdict::pass);
    CHECK(classify_margin(-0.3, 0.1) == Verdict::violation);
    CHECK(classify_margin(-0.4, 0.1) == Verdict::violation);
    CHECK(classify_margin(-0.41, 0.1) == Verdict::contradiction);
  }

  TEST_CASE("Lipschitz check") {
    std::vector<ExponentEstimate> es;
    for (int i = 0; i < 5; ++i) es.push_back(synthetic(3, 0.1 * i, 0.2, 0.0));
    LipschitzReport r = check_lipschitz(es, 3);
    CHECK(r.constant == doctest::Approx(std::sqrt(6.0)).epsilon(1e-15));
    CHECK(r.passed);
    es[3].lambda_hat += 10 * 0.1 * r.constant;
    r = check_lipschitz(es, 3);
    CHECK_FALSE(r.passed);
    CHECK(std::count_if(r.pairs.begin(), r.pairs.end(), [](const PairCheck& p) { return p.flagged; }) == 2);
  }

  TEST_CASE("monotonicity in dimension and xi") {
    CHECK(check_monotone_in_dimension(synthetic(2, 0.0, 0.0, 0.0), synthetic(3, 0.0, 0.0, 0.0)).passed);
    CHECK(check_monotone_in_dimension(synthetic(2, 0.4, 0.2), synthetic(3, 0.4, 0.19)).passed);
    CHECK_FALSE(check_monotone_in_dimension(synthetic(2, 0.4, 0.3), synthetic(3, 0.4, 0.1)).passed);
    CHECK(kind_of([] { check_monotone_in_dimension(synthetic(2, 0.4, 0.2), synthetic(3, 0.5, 0.2)); }) ==
          ErrorKind::incompatible_estimates);
    std::vector<ExponentEstimate> es{synthetic(2, 0.1, 0.05), synthetic(2, 0.2, 0.1), synthetic(2, 0.3, 0.15)};
    CHECK(check_monotone_in_xi(es).passed);
    es[2].lambda_hat = 0.0;
    CHECK_FALSE(check_monotone_in_xi(es).passed);
  }

  TEST_CASE("bracket check") {
    CHECK(check_bracket(synthetic(2, kInvSqrt6, 1.0 / 6)).passed);
    CHECK(check_bracket(synthetic(2, 0.1, 0.2)).passed);  // within allowance of 0.1414
    CHECK_FALSE(check_bracket(synthetic(2, 0.1, 0.5)).passed);
  }

  TEST_CASE("quantile robustness on a clean power law") {
    gen::Gen g("quantiles", 0);
    const auto recs = synthetic_records(g, 2, 0.4, 0.2, 0.05, 4, 9, 40);
    const auto r = check_quantile_robustness(recs, 2, 0.4, EstimatorOptions{});
    CHECK(r.estimates.size() == 3);
    CHECK(r.passed);
  }

  TEST_CASE("thick points: small alpha counts about half the sites") {
    const ThickPointReport r = thick_point_scan(2, 0.01, 3, 6, 6, 17);
    CHECK(r.expected_exponent == doctest::Approx(2.0 - 0.00005));
    CHECK(std::fabs(r.fitted_exponent - 2.0) < 0.2);
    for (const auto& s : r.per_scale) CHECK(s.mean_count == doctest::Approx(s.sites / 2.0).epsilon(0.25));
    CHECK_FALSE(r.low_power);
  }

  TEST_CASE("thick points: alpha past the support is low power") {
    const ThickPointReport r = thick_point_scan(2, 2.5, 3, 5, 2, 17);
    CHECK(r.low_power);
  }

  TEST_CASE("plan validation") {
    ExperimentPlan p;
    p.xi_grid = {0.1, 0.2};
    CHECK_NOTHROW(p.validate());
    p.xi_grid = {0.2, 0.1};
    CHECK(kind_of([&] { p.validate(); }) == ErrorKind::domain);
    p.xi_grid = {0.1};
    p.replicates = 1;
    CHECK(kind_of([&] { p.validate(); }) == ErrorKind::domain);
    p.replicates = 5;
    p.k_max = 12;
    p.dim = 3;
    p.cell.limits.memory_cap_bytes = 1 << 20;
    CHECK(kind_of([&] { p.validate(); }) == ErrorKind::resource_limit);
  }

  TEST_CASE("resumed plan equals a fresh one and never repeats a key") {
    ExperimentPlan p;
    p.dim = 2;
    p.xi_grid = {0.0, 0.3};
    p.k_min = 3;
    p.k_max = 5;
    p.replicates = 3;
    p.master_seed = 4;
    std::vector<ResultRecord> fresh;
    run_plan(p, 1, [](const RecordKey&) { return false; }, [&](const ResultRecord& r) { fresh.push_back(r); });
    CHECK(fresh.size() == 18);

    // Pretend the first half was stored before an interruption.
    std::vector<ResultRecord> resumed(fresh.begin(), fresh.begin() + 8);
    std::set<RecordKey> have;
    for (const auto& r : resumed) have.insert(key_of(r));
    run_plan(p, 2, [&](const RecordKey& k) { return have.count(k) != 0; },
             [&](const ResultRecord& r) {
               CHECK(have.insert(key_of(r)).second);
               resumed.push_back(r);
             });
    sort_records(fresh);
    sort_records(resumed);
    CHECK(resumed == fresh);
  }

  TEST_CASE("worker count does not change results") {
    ExperimentPlan p;
    p.xi_grid = {0.25};
    p.k_min = 3;
    p.k_max = 5;
    p.replicates = 4;
    std::vector<ResultRecord> one, three;
    run_plan(p, 1, [](const RecordKey&) { return false; }, [&](const ResultRecord& r) { one.push_back(r); });
    run_plan(p, 3, [](const RecordKey&) { return false; }, [&](const ResultRecord& r) { three.push_back(r); });
    CHECK(one == three);
  }
}
