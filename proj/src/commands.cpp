#include "lfpp/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "lfpp/bounds.hpp"
#include "lfpp/error.hpp"
#include "lfpp/exponent.hpp"
#include "lfpp/records.hpp"
#include "lfpp/report.hpp"
#include "lfpp/rng.hpp"
#include "lfpp/snapshot.hpp"
#include "lfpp/verify.hpp"

namespace lfpp {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

// Timestamps and timings go here and nowhere else.
class RunLog {
 public:
  explicit RunLog(const fs::path& dir) : os_(dir / "run.log", std::ios::app) {}

  void line(const std::string& text) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    os_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << "  " << text << '\n' << std::flush;
  }

 private:
  std::ofstream os_;
};

// Copies everything written to it into two buffers.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (c == EOF) return !EOF;
    const int r1 = a_->sputc(static_cast<char>(c));
    const int r2 = b_->sputc(static_cast<char>(c));
    return r1 == EOF || r2 == EOF ? EOF : c;
  }
  int sync() override { return a_->pubsync() == 0 && b_->pubsync() == 0 ? 0 : -1; }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path out = cfg.out;
  fs::create_directories(out);
  std::ofstream os(out / "config.txt", std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::io, "cannot write " + (out / "config.txt").string());
  // The directory is where the snapshot lives, so it is not part of it.
  os << serialize(cfg, {"run.out"});
  return out;
}

// Re-throws with the parameters that produced the error.
template <class F>
auto with_context(const std::string& context, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    fail(e.kind(), context + ": " + e.message());
  }
}

std::string snapshot_name(const FieldSample& f) {
  std::ostringstream os;
  os << "d" << f.spec().dim << "_k" << f.spec().scale_index << "_" << std::hex << std::setw(16) << std::setfill('0')
     << f.spec().master_seed;
  return os.str();
}

std::vector<ExperimentPlan> plans_from(const RunConfig& cfg) {
  const auto dims = parse_int_list(cfg.dims);
  const auto xis = sorted_unique(parse_value_list(cfg.xi));
  const auto [k_min, k_max] = parse_int_range(cfg.k);
  std::vector<ExperimentPlan> plans;
  for (int d : dims) {
    ExperimentPlan p;
    p.dim = d;
    p.xi_grid = xis;
    p.k_min = k_min;
    p.k_max = k_max;
    p.replicates = cfg.reps;
    p.master_seed = cfg.seed;
    p.quantile = cfg.quantile;
    p.bootstrap_resamples = cfg.resamples;
    p.cell.padding_factor = cfg.padding;
    p.cell.layer_base_scale = cfg.layer_scale;
    p.cell.limits.memory_cap_bytes = cfg.mem_cap;
    p.cell.record_timing = cfg.record_timing;
    try {
      p.validate();
    } catch (const Error& e) {
      fail(e.kind() == ErrorKind::resource_limit ? e.kind() : ErrorKind::usage,
           "plan for d = " + std::to_string(d) + ": " + e.message());
    }
    if (xis.back() > 0.0) {
      // Each worker gets an equal share of the cap.
      const FieldSpec top{d, k_max, cfg.padding, cfg.layer_scale, cfg.seed, 0};
      const std::size_t need = sampler_memory_bytes(top);
      const std::uint64_t share = cfg.mem_cap / static_cast<std::uint64_t>(cfg.workers);
      require(need <= share, ErrorKind::resource_limit,
              "d = " + std::to_string(d) + ", k = " + std::to_string(k_max) + " needs " + std::to_string(need) +
                  " bytes per field; the cap allows " + std::to_string(share) + " per worker");
    }
    plans.push_back(std::move(p));
  }
  return plans;
}

Json plan_checks(const std::vector<ExponentEstimate>& ests, int d) {
  Json j;
  j["d"] = d;
  j["lipschitz"] = to_json(check_lipschitz(ests, d));
  j["monotone_in_xi"] = to_json(check_monotone_in_xi(ests));
  Json brackets = Json::array();
  for (const auto& e : ests) brackets.push_back(to_json(check_bracket(e, 0.1)));
  j["brackets"] = brackets;
  Json ineq = Json::array();
  if (ests.size() < 3) {
    j["differential_inequalities"] = "skipped: needs estimates at three or more xi values";
    return j;
  }
  try {
    for (const auto& der : estimate_derivative(ests)) {
      const auto it = std::find_if(ests.begin(), ests.end(), [&](const auto& e) { return e.xi == der.xi; });
      Json r = to_json(check_differential_inequalities(*it, der, d));
      r["derivative"] = to_json(der);
      ineq.push_back(r);
    }
    j["differential_inequalities"] = ineq;
  } catch (const Error& e) {
    j["differential_inequalities"] = "skipped: " + e.message();
  }
  return j;
}

LambdaFunction lambda_source(const RunConfig& cfg, int d) {
  const std::string& s = cfg.lambda;
  if (s == "lower") return LambdaFunction::lower_bound(d);
  if (s == "upper") return LambdaFunction::upper_bound(d);
  if (s == "zero") return LambdaFunction::constant(0.0);
  if (s.rfind("affine:", 0) == 0) {
    const auto v = parse_value_list(s.substr(7));
    require(v.size() == 2, ErrorKind::usage, "affine lambda needs 'affine:intercept,slope'");
    return LambdaFunction::affine(v[0], v[1]);
  }
  if (s.rfind("records:", 0) == 0) {
    const auto records = read_records(s.substr(8));
    std::vector<double> xs;
    for (const auto& r : records) {
      if (r.dim == d && r.xi > 0.0) xs.push_back(r.xi);
    }
    xs = sorted_unique(xs);
    require(!xs.empty(), ErrorKind::usage, "no records with d = " + std::to_string(d) + " and xi > 0 in " + s.substr(8));
    EstimatorOptions o;
    o.quantile = cfg.quantile;
    o.resamples = cfg.resamples;
    o.master_seed = cfg.seed;
    std::vector<double> ys;
    for (double xi : xs) ys.push_back(estimate_lambda(records, d, xi, o).lambda_hat);
    return LambdaFunction::from_estimates(d, xs, ys);
  }
  fail(ErrorKind::usage, "unknown lambda source '" + s + "' (lower, upper, zero, affine:a,b, records:PATH)");
}

}  // namespace

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto plans = plans_from(cfg);
  const fs::path dir = prepare_out(cfg);
  RunLog log(dir);
  log.line("estimate: start");

  RecordStore store(dir / "records.csv");
  if (store.recovered_bytes() > 0) {
    log.line("records: dropped " + std::to_string(store.recovered_bytes()) + " bytes of an interrupted append");
  }
  Json errors = Json::array();
  for (auto plan : plans) {
    if (cfg.save_fields) {
      const fs::path fields = dir / "fields";
      fs::create_directories(fields);
      plan.cell.field_hook = [fields](const FieldSample& f) { save_snapshot(f, fields / snapshot_name(f)); };
    }
    const auto t0 = Clock::now();
    const PlanOutcome res = run_plan(
        plan, cfg.workers, [&](const RecordKey& key) { return store.contains(key); },
        [&](const ResultRecord& r) { store.append(r); });
    for (const auto& f : res.failures) errors.push_back(to_json(f));
    log.line("d = " + std::to_string(plan.dim) + ": " + std::to_string(res.jobs_run) + " jobs, " +
             std::to_string(res.records_written) + " records, " + std::to_string(res.failures.size()) +
             " failures, " + fixed(seconds_since(t0), 2) + " s");
  }

  std::map<int, std::vector<ExponentEstimate>> by_dim;
  out << std::left << std::setw(4) << "d" << std::setw(22) << "xi" << std::setw(12) << "lambda_hat" << std::setw(12)
      << "stderr" << std::setw(12) << "lower" << "upper\n";
  for (const auto& plan : plans) {
    for (double xi : plan.xi_grid) {
      try {
        const ExponentEstimate e = estimate_lambda(store.records(), plan, xi);
        write_json(dir / ("lambda_d" + std::to_string(plan.dim) + "_xi" + value_label(xi) + ".json"), to_json(e));
        by_dim[plan.dim].push_back(e);
        const BoundReport b = lambda_bounds(plan.dim, xi);
        out << std::setw(4) << plan.dim << std::setw(22) << value_label(xi) << std::setw(12) << fixed(e.lambda_hat, 5)
            << std::setw(12) << fixed(e.std_error, 5) << std::setw(12) << fixed(b.lower, 5) << fixed(b.upper, 5)
            << '\n';
      } catch (const Error& e) {
        errors.push_back({{"d", plan.dim}, {"xi", xi}, {"kind", to_string(e.kind())}, {"message", e.message()}});
      }
    }
  }
  for (const auto& [d, ests] : by_dim) write_json(dir / ("checks_d" + std::to_string(d) + ".json"), plan_checks(ests, d));

  Json dim_checks = Json::array();
  for (auto it = by_dim.begin(); it != by_dim.end(); ++it) {
    const auto next = std::next(it);
    if (next == by_dim.end()) break;
    for (const auto& lo : it->second) {
      for (const auto& hi : next->second) {
        if (lo.xi == hi.xi) dim_checks.push_back(to_json(check_monotone_in_dimension(lo, hi)));
      }
    }
  }
  if (by_dim.size() >= 2) write_json(dir / "checks_dimension.json", dim_checks);

  const fs::path err_path = dir / "errors.json";
  if (errors.empty()) {
    fs::remove(err_path);
  } else {
    write_json(err_path, errors);
    out << errors.size() << " failures, see " << err_path.string() << '\n';
  }
  log.line("estimate: done");
  return errors.empty() ? 0 : 1;
}

int cmd_bounds(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto dims = parse_int_list(cfg.dims);
  const auto xis = parse_value_list(cfg.xi);
  const auto gammas = parse_value_list(cfg.gamma);
  for (int d : dims) {
    require(d >= 2, ErrorKind::usage, "d must be >= 2");
    require(cfg.figure != "dgamma" || d >= 3, ErrorKind::usage, "the d_gamma figure needs d >= 3");
  }
  const fs::path dir = prepare_out(cfg);
  for (int d : dims) {
    Json j;
    Json lam = Json::array();
    out << "d = " << d << '\n';
    for (double xi : xis) {
      const BoundReport r =
          with_context("d = " + std::to_string(d) + ", xi = " + value_label(xi), [&] { return lambda_bounds(d, xi); });
      lam.push_back(to_json(r));
      out << "  xi " << std::setw(10) << value_label(xi) << "  lambda in [" << fixed(r.lower, 6) << ", "
          << fixed(r.upper, 6) << "]\n";
    }
    j["lambda"] = lam;
    if (d >= 3) {
      Json dg = Json::array();
      for (double g : gammas) {
        const BoundReport r = with_context("d = " + std::to_string(d) + ", gamma = " + value_label(g),
                                           [&] { return d_gamma_bounds(d, g); });
        dg.push_back(to_json(r));
        out << "  gamma " << std::setw(7) << value_label(g) << "  d_gamma in [" << fixed(r.lower, 6) << ", "
            << fixed(r.upper, 6) << "]\n";
      }
      j["d_gamma"] = dg;
    }
    write_json(dir / ("bounds_d" + std::to_string(d) + ".json"), j);

    if (cfg.figure == "lambda") {
      const fs::path p = dir / ("figure_lambda_d" + std::to_string(d) + ".csv");
      std::ofstream os(p, std::ios::trunc);
      write_figure_csv(os, "xi", lambda_figure(d, 0.0, 1.5, cfg.step));
      out << "  wrote " << p.string() << '\n';
    } else if (cfg.figure == "dgamma") {
      const fs::path p = dir / ("figure_dgamma_d" + std::to_string(d) + ".csv");
      std::ofstream os(p, std::ios::trunc);
      write_figure_csv(os, "gamma", d_gamma_figure(d, cfg.step));
      out << "  wrote " << p.string() << '\n';
    }
  }
  return 0;
}

int cmd_dgamma(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto dims = parse_int_list(cfg.dims);
  const auto gammas = parse_value_list(cfg.gamma);
  for (int d : dims) require(d >= 3, ErrorKind::usage, "dgamma needs d >= 3");
  const fs::path dir = prepare_out(cfg);
  int failures = 0;
  for (int d : dims) {
    const LambdaFunction lam = lambda_source(cfg, d);
    Json sols = Json::array();
    out << "d = " << d << ", lambda = " << lam.name() << '\n';
    for (double g : gammas) {
      try {
        const DimensionSolution s = solve_d_gamma(g, d, lam);
        sols.push_back(to_json(s));
        out << "  gamma " << std::setw(7) << value_label(g) << "  d_gamma " << fixed(s.d_gamma, 9) << "  xi "
            << fixed(s.xi, 6) << '\n';
      } catch (const Error& e) {
        ++failures;
        sols.push_back({{"gamma", g}, {"kind", to_string(e.kind())}, {"message", e.message()}});
        out << "  gamma " << std::setw(7) << value_label(g) << "  " << e.what() << '\n';
      }
    }
    Json j = {{"d", d}, {"lambda", lam.name()}, {"solutions", sols}};
    try {
      j["xi_c"] = xi_c(d, lam);
      out << "  xi_c " << fixed(j["xi_c"].get<double>(), 9) << '\n';
    } catch (const Error& e) {
      j["xi_c"] = {{"kind", to_string(e.kind())}, {"message", e.message()}};
    }
    const Interval br = xi_c_bracket(d, LambdaFunction::lower_bound(d), LambdaFunction::upper_bound(d));
    j["xi_c_bracket"] = {br.lo, br.hi};
    out << "  xi_c bracket from the bounds [" << fixed(br.lo, 9) << ", " << fixed(br.hi, 9) << "]\n";
    write_json(dir / ("dgamma_d" + std::to_string(d) + ".json"), j);
  }
  return failures == 0 ? 0 : 1;
}

int cmd_sample(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto dims = parse_int_list(cfg.dims);
  const auto [k_min, k_max] = parse_int_range(cfg.k);
  std::vector<FieldSpec> specs;
  for (int d : dims) {
    for (int k = k_min; k <= k_max; ++k) {
      FieldSpec s{d, k, cfg.padding, cfg.layer_scale, cfg.seed,
                  job_key("sample/" + std::to_string(d) + "/" + std::to_string(k))};
      with_context("d = " + std::to_string(d) + ", k = " + std::to_string(k), [&] { s.validate(); });
      const std::size_t need = sampler_memory_bytes(s);
      require(need <= cfg.mem_cap, ErrorKind::resource_limit,
              "d = " + std::to_string(d) + ", k = " + std::to_string(k) + " needs " + std::to_string(need) +
                  " bytes, cap is " + std::to_string(cfg.mem_cap));
      specs.push_back(s);
    }
  }
  const fs::path dir = prepare_out(cfg);
  RunLog log(dir);
  SamplerLimits limits;
  limits.memory_cap_bytes = cfg.mem_cap;
  for (const auto& s : specs) {
    const auto t0 = Clock::now();
    const FieldSample f = sample_field(s, limits);
    const std::string base = "field_d" + std::to_string(s.dim) + "_k" + std::to_string(s.scale_index);
    save_snapshot(f, dir / base);
    long double sq = 0.0L;
    for (double v : f.values()) sq += static_cast<long double>(v) * v;
    const double var = static_cast<double>(sq / static_cast<long double>(f.values().size()));
    out << base << ": " << f.values().size() << " sites, mean square " << fixed(var, 4) << " (exact variance before centering "
        << fixed(layer_variance(s, 1, s.scale_index), 4) << "), max |h| " << fixed(f.max_abs(), 4) << '\n';
    log.line(base + ": " + fixed(seconds_since(t0), 3) + " s");
  }
  return 0;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  VerifyOptions o;
  o.quick = cfg.quick;
  o.seed = cfg.seed;
  o.workers = cfg.workers;
  o.memory_cap = cfg.mem_cap;
  o.out = prepare_out(cfg);
  if (!cfg.only.empty()) {
    std::stringstream ss(cfg.only);
    for (std::string id; std::getline(ss, id, ',');) o.only.push_back(id);
  }
  // The check table, which carries timings, is mirrored into run.log.
  std::ofstream log_file(o.out / "run.log", std::ios::app);
  TeeBuf tee(out.rdbuf(), log_file.rdbuf());
  std::ostream both(&tee);
  RunLog(o.out).line(std::string("verify: start") + (o.quick ? " (quick)" : ""));
  const auto t0 = Clock::now();
  const auto results = run_verify(o, both);
  std::vector<std::string> failed;
  for (const auto& r : results) {
    if (!r.passed) failed.push_back(r.id);
  }
  both << results.size() - failed.size() << "/" << results.size() << " checks passed in "
       << fixed(seconds_since(t0), 1) << " s\n";
  if (!failed.empty()) {
    both << "failed:";
    for (const auto& id : failed) both << ' ' << id;
    both << '\n';
  }
  both.flush();
  return failed.empty() ? 0 : 1;
}

}  // namespace lfpp
