#include "lfpp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "lfpp/error.hpp"
#include "lfpp/records.hpp"

namespace lfpp {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_integer(std::string_view text, std::string_view what) {
  text = trim(text);
  T v{};
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && p == text.data() + text.size() && !text.empty(), ErrorKind::usage,
          "invalid " + std::string(what) + ": '" + std::string(text) + "'");
  return v;
}

double parse_number(std::string_view text, std::string_view what) {
  text = trim(text);
  try {
    const double v = parse_double(text);
    require(std::isfinite(v), ErrorKind::usage, "");
    return v;
  } catch (const Error&) {
    fail(ErrorKind::usage, "invalid " + std::string(what) + ": '" + std::string(text) + "'");
  }
}

bool parse_bool(std::string_view text, std::string_view what) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  fail(ErrorKind::usage, "invalid " + std::string(what) + ": '" + std::string(text) + "'");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Field {
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field integer_field(T RunConfig::*member, const char* key) {
  return {[member, key](RunConfig& c, std::string_view v) { c.*member = parse_integer<T>(v, key); },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field number_field(double RunConfig::*member, const char* key) {
  return {[member, key](RunConfig& c, std::string_view v) { c.*member = parse_number(v, key); },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

Field bool_field(bool RunConfig::*member, const char* key) {
  return {[member, key](RunConfig& c, std::string_view v) { c.*member = parse_bool(v, key); },
          [member](const RunConfig& c) { return bool_text(c.*member); }};
}

Field text_field(std::string RunConfig::*member, const char* key) {
  return {[member, key](RunConfig& c, std::string_view v) {
            v = trim(v);
            require(v.find_first_of("#\n") == std::string_view::npos, ErrorKind::usage,
                    std::string(key) + " must not contain '#' or line breaks");
            c.*member = std::string(v);
          },
          [member](const RunConfig& c) { return c.*member; }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table{
      {"run.out", text_field(&RunConfig::out, "run.out")},
      {"run.seed", integer_field(&RunConfig::seed, "run.seed")},
      {"run.workers", integer_field(&RunConfig::workers, "run.workers")},
      {"run.mem_cap",
       {[](RunConfig& c, std::string_view v) { c.mem_cap = parse_bytes(v); },
        [](const RunConfig& c) { return std::to_string(c.mem_cap); }}},
      {"run.save_fields", bool_field(&RunConfig::save_fields, "run.save_fields")},
      {"run.record_timing", bool_field(&RunConfig::record_timing, "run.record_timing")},
      {"plan.d", text_field(&RunConfig::dims, "plan.d")},
      {"plan.xi", text_field(&RunConfig::xi, "plan.xi")},
      {"plan.k", text_field(&RunConfig::k, "plan.k")},
      {"plan.reps", integer_field(&RunConfig::reps, "plan.reps")},
      {"plan.quantile", number_field(&RunConfig::quantile, "plan.quantile")},
      {"plan.resamples", integer_field(&RunConfig::resamples, "plan.resamples")},
      {"field.padding", number_field(&RunConfig::padding, "field.padding")},
      {"field.layer_scale", number_field(&RunConfig::layer_scale, "field.layer_scale")},
      {"bounds.figure", text_field(&RunConfig::figure, "bounds.figure")},
      {"bounds.gamma", text_field(&RunConfig::gamma, "bounds.gamma")},
      {"bounds.step", number_field(&RunConfig::step, "bounds.step")},
      {"dgamma.lambda", text_field(&RunConfig::lambda, "dgamma.lambda")},
      {"verify.quick", bool_field(&RunConfig::quick, "verify.quick")},
      {"verify.only", text_field(&RunConfig::only, "verify.only")},
  };
  return table;
}

const Field& field_for(std::string_view key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return f;
  }
  fail(ErrorKind::usage, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

void RunConfig::validate() const {
  require(workers >= 1, ErrorKind::usage, "run.workers must be >= 1");
  require(mem_cap > 0, ErrorKind::usage, "run.mem_cap must be positive");
  require(!out.empty(), ErrorKind::usage, "run.out must not be empty");
  require(reps >= 1, ErrorKind::usage, "plan.reps must be >= 1");
  require(quantile > 0.0 && quantile < 1.0, ErrorKind::usage, "plan.quantile must lie in (0, 1)");
  require(step > 0.0, ErrorKind::usage, "bounds.step must be positive");
  require(figure == "none" || figure == "lambda" || figure == "dgamma", ErrorKind::usage,
          "bounds.figure must be none, lambda or dgamma");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) out.push_back(k);
    return out;
  }();
  return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) { field_for(key).set(cfg, value); }

std::string get_setting(const RunConfig& cfg, std::string_view key) { return field_for(key).get(cfg); }

RunConfig parse_config(std::string_view text, RunConfig base) {
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos, ErrorKind::usage,
            "config line " + std::to_string(line_no) + ": expected 'section.key = value'");
    apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

std::string serialize(const RunConfig& cfg, const std::vector<std::string>& skip) {
  std::string out;
  std::string section;
  for (const auto& [key, f] : fields()) {
    if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
    const std::string sec = key.substr(0, key.find('.'));
    if (sec != section) {
      if (!section.empty()) out += '\n';
      section = sec;
    }
    out += key + " = " + f.get(cfg) + '\n';
  }
  return out;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::usage, "cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::vector<double> parse_value_list(std::string_view text) {
  text = trim(text);
  require(!text.empty(), ErrorKind::usage, "empty value list");
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    require(parts.size() == 3, ErrorKind::usage, "range must be a:b:step, got '" + std::string(text) + "'");
    const double a = parse_number(parts[0], "range start");
    const double b = parse_number(parts[1], "range end");
    const double step = parse_number(parts[2], "range step");
    require(step > 0.0 && b >= a, ErrorKind::usage, "range needs step > 0 and end >= start");
    const double n = std::floor((b - a) / step + 1e-9);
    require(n < 1e7, ErrorKind::usage, "range has too many points");
    std::vector<double> out;
    for (int i = 0; i <= static_cast<int>(n); ++i) out.push_back(a + i * step);
    return out;
  }
  std::vector<double> out;
  for (auto part : split(text, ',')) out.push_back(parse_number(part, "list value"));
  return out;
}

std::pair<int, int> parse_int_range(std::string_view text) {
  text = trim(text);
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    const int v = parse_integer<int>(text, "range");
    return {v, v};
  }
  const int a = parse_integer<int>(text.substr(0, dots), "range start");
  const int b = parse_integer<int>(text.substr(dots + 2), "range end");
  require(a <= b, ErrorKind::usage, "range start exceeds end in '" + std::string(text) + "'");
  return {a, b};
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  for (auto part : split(trim(text), ',')) {
    const auto [a, b] = parse_int_range(part);
    for (int v = a; v <= b; ++v) out.push_back(v);
  }
  return out;
}

std::uint64_t parse_bytes(std::string_view text) {
  text = trim(text);
  require(!text.empty(), ErrorKind::usage, "empty byte count");
  std::uint64_t scale = 1;
  switch (text.back()) {
    case 'K': case 'k': scale = 1ull << 10; break;
    case 'M': case 'm': scale = 1ull << 20; break;
    case 'G': case 'g': scale = 1ull << 30; break;
    default: break;
  }
  if (scale != 1) text.remove_suffix(1);
  const auto v = parse_integer<std::uint64_t>(text, "byte count");
  require(v <= UINT64_MAX / scale, ErrorKind::usage, "byte count overflows");
  return v * scale;
}

}  // namespace lfpp
