#include "lfpp/report.hpp"

#include <fstream>

#include "lfpp/error.hpp"

namespace lfpp {

Json to_json(const ExponentEstimate& e, bool include_bootstrap) {
  Json scales = Json::array();
  for (const auto& s : e.per_scale) {
    scales.push_back({{"k", s.scale_index},
                      {"log_spacing", s.log_spacing},
                      {"quantile", s.quantile},
                      {"bootstrap_variance", s.bootstrap_variance},
                      {"replicates", s.replicates}});
  }
  Json j = {{"d", e.dim},
            {"xi", e.xi},
            {"lambda_hat", e.lambda_hat},
            {"stderr", e.std_error},
            {"intercept", e.intercept},
            {"quantile_level", e.quantile_level},
            {"r_squared", e.r_squared},
            {"residuals", e.residuals},
            {"per_scale", scales},
            {"bootstrap_seed", e.bootstrap_seed},
            {"bootstrap_resamples", e.bootstrap_slopes.size()}};
  if (include_bootstrap) j["bootstrap_slopes"] = e.bootstrap_slopes;
  return j;
}

Json to_json(const DerivativeEstimate& d) {
  return {{"xi", d.xi}, {"lambda_prime_hat", d.lambda_prime_hat}, {"stderr", d.std_error},
          {"spacing", d.spacing}, {"paired_bootstrap", d.paired}};
}

Json to_json(const InequalityReport& r) {
  Json j = {{"d", r.dim},
            {"xi", r.xi},
            {"lambda_hat", r.lambda_hat},
            {"lambda_prime_hat", r.lambda_prime_hat},
            {"neg_xi_bound", r.neg_xi_bound},
            {"lower_bound", r.lower_bound},
            {"lower_branch", r.lower_branch},
            {"upper_bound", r.upper_bound},
            {"lower_margin", r.lower_margin},
            {"upper_margin", r.upper_margin},
            {"lower_sigma", r.lower_sigma},
            {"upper_sigma", r.upper_sigma},
            {"lower_verdict", to_string(r.lower_verdict)},
            {"upper_verdict", to_string(r.upper_verdict)},
            {"passed", r.passed()}};
  if (r.ratio_excluded) {
    j["ratio_bound"] = "excluded at xi = 0";
  } else {
    j["ratio_bound"] = r.ratio_bound;
  }
  return j;
}

Json to_json(const PairCheck& p) {
  return {{"xi_a", p.xi_a}, {"xi_b", p.xi_b}, {"change", p.change}, {"allowed", p.allowed}, {"flagged", p.flagged}};
}

Json to_json(const LipschitzReport& r) {
  Json pairs = Json::array();
  for (const auto& p : r.pairs) pairs.push_back(to_json(p));
  return {{"d", r.dim}, {"constant", r.constant}, {"pairs", pairs}, {"passed", r.passed}};
}

Json to_json(const MonotoneReport& r) {
  return {{"xi", r.xi},           {"d_low", r.dim_low},         {"d_high", r.dim_high},
          {"lambda_low", r.lambda_low}, {"lambda_high", r.lambda_high}, {"tolerance", r.tolerance},
          {"margin", r.margin},   {"passed", r.passed}};
}

Json to_json(const XiMonotoneReport& r) {
  Json pairs = Json::array();
  for (const auto& p : r.pairs) pairs.push_back(to_json(p));
  return {{"d", r.dim}, {"pairs", pairs}, {"passed", r.passed}};
}

Json to_json(const BracketReport& r) {
  return {{"d", r.dim},         {"xi", r.xi},       {"lambda_hat", r.lambda_hat}, {"lower", r.lower},
          {"upper", r.upper},   {"allowance", r.allowance}, {"passed", r.passed}};
}

Json to_json(const QuantileRobustnessReport& r) {
  Json est = Json::array();
  for (const auto& e : r.estimates) {
    est.push_back({{"quantile_level", e.quantile_level}, {"lambda_hat", e.lambda_hat}, {"stderr", e.std_error}});
  }
  return {{"d", r.dim}, {"xi", r.xi}, {"estimates", est}, {"worst_ratio", r.worst_ratio}, {"passed", r.passed}};
}

Json to_json(const ThickPointReport& r) {
  Json scales = Json::array();
  for (const auto& s : r.per_scale) {
    scales.push_back({{"k", s.scale_index}, {"sites", s.sites}, {"mean_count", s.mean_count}, {"counts", s.counts}});
  }
  return {{"d", r.dim},
          {"alpha", r.alpha},
          {"per_scale", scales},
          {"fitted_exponent", r.fitted_exponent},
          {"fit_stderr", r.fit_stderr},
          {"expected_exponent", r.expected_exponent},
          {"low_power", r.low_power}};
}

Json to_json(const BoundReport& r) {
  Json branches = Json::array();
  for (const auto& [label, value] : r.branches) branches.push_back({{"label", label}, {"value", value}});
  return {{"d", r.dim},
          {r.parameter, r.value},
          {"lower", r.lower},
          {"upper", r.upper},
          {"lower_label", r.lower_label},
          {"upper_label", r.upper_label},
          {"branches", branches}};
}

Json to_json(const HighDimBound& b) {
  return {{"A", b.A}, {"xi", b.xi}, {"value", b.value}, {"display", b.display}, {"validity", b.validity}};
}

Json to_json(const DimensionSolution& s) {
  return {{"gamma", s.gamma}, {"d", s.dim},       {"d_gamma", s.d_gamma},       {"xi", s.xi},
          {"Q", s.Q},         {"residual", s.residual}, {"widened_bracket", s.widened}};
}

Json to_json(const DGammaDerivativeReport& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"xi", p.xi},
                   {"q_hat", p.q_hat},
                   {"q_hat_prime", p.q_hat_prime},
                   {"gamma", p.gamma},
                   {"d_gamma", p.d_gamma},
                   {"formula", p.formula},
                   {"finite_difference", p.finite_difference},
                   {"positive", p.positive},
                   {"near_critical", p.near_critical}});
  }
  return {{"d", r.dim},
          {"lambda", r.lambda_name},
          {"points", pts},
          {"all_positive", r.all_positive},
          {"max_disagreement", r.max_disagreement}};
}

Json to_json(const JobFailure& f) {
  return {{"d", f.dim}, {"k", f.scale_index}, {"seed", f.seed}, {"kind", f.kind}, {"message", f.message}};
}

void write_json(const std::filesystem::path& path, const Json& value) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorKind::io, "cannot write " + path.string());
  os << value.dump(2) << '\n';
  if (!os) fail(ErrorKind::io, "write failed for " + path.string());
}

std::string value_label(double value) { return format_double(value); }

}  // namespace lfpp
