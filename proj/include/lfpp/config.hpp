#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lfpp {

/// Settings of one run. Text form is one `section.key = value` line per
/// setting; `#` starts a comment.
struct RunConfig {
  std::string out = "run";
  std::uint64_t seed = 1;
  int workers = 1;
  std::uint64_t mem_cap = std::uint64_t{4} << 30;
  bool save_fields = false;
  bool record_timing = false;

  std::string dims = "2";
  std::string xi = "0.1,0.25,0.4082482904638631,0.6";
  std::string k = "5..9";
  int reps = 20;
  double quantile = 0.5;
  int resamples = 200;

  double padding = 2.0;
  double layer_scale = 1.0;

  std::string figure = "none";
  std::string gamma = "1";
  double step = 0.001;
  std::string lambda = "lower";

  bool quick = false;
  std::string only;

  void validate() const;
};

/// Every key accepted in a config file, in serialization order.
const std::vector<std::string>& config_keys();

/// Sets one dotted key from text; usage error on unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);
std::string get_setting(const RunConfig& cfg, std::string_view key);

RunConfig parse_config(std::string_view text, RunConfig base = {});
/// Keys in `skip` are left out (run snapshots omit run.out).
std::string serialize(const RunConfig& cfg, const std::vector<std::string>& skip = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// "0.1,0.2" or "a:b:step" (inclusive of b up to rounding).
std::vector<double> parse_value_list(std::string_view text);
/// "a..b" or a single integer.
std::pair<int, int> parse_int_range(std::string_view text);
/// "2,3" or "2..4".
std::vector<int> parse_int_list(std::string_view text);
/// Bytes with an optional K, M or G suffix (powers of 1024).
std::uint64_t parse_bytes(std::string_view text);

}  // namespace lfpp
