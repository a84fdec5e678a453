#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lfpp/commands.hpp"
#include "lfpp/error.hpp"

namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
  bool boolean = false;
};

// Flag, config key, help. Each flag also reads LFPP_<NAME> from the environment.
const std::vector<FlagSpec> kFlags{
    {"--d", "plan.d", "dimension(s): 2 or 2,3 or 2..4"},
    {"--xi", "plan.xi", "xi values: comma list or a:b:step"},
    {"--k", "plan.k", "scale range a..b (k = log2 of inverse spacing)"},
    {"--reps", "plan.reps", "replicates per (d, k)"},
    {"--seed", "run.seed", "master seed"},
    {"--workers", "run.workers", "worker threads"},
    {"--mem-cap", "run.mem_cap", "memory cap in bytes (K, M, G suffixes)"},
    {"--out", "run.out", "output directory"},
    {"--quantile", "plan.quantile", "distance quantile level"},
    {"--resamples", "plan.resamples", "bootstrap resamples"},
    {"--padding", "field.padding", "torus padding factor"},
    {"--layer-scale", "field.layer_scale", "base scale of the Gaussian layers"},
    {"--figure", "bounds.figure", "figure data: none, lambda or dgamma"},
    {"--gamma", "bounds.gamma", "gamma values: comma list or a:b:step"},
    {"--step", "bounds.step", "figure grid step"},
    {"--lambda", "dgamma.lambda", "lambda for dgamma: lower, upper, zero, affine:a,b, records:PATH"},
    {"--only", "verify.only", "comma list of check ids"},
    {"--quick", "verify.quick", "small-scale verification suite", true},
    {"--save-fields", "run.save_fields", "write field snapshots", true},
    {"--record-timing", "run.record_timing", "store wall time in records", true},
};

std::string env_name(const char* flag) {
  std::string s = "LFPP_";
  for (const char* p = flag + 2; *p; ++p) s += *p == '-' ? '_' : static_cast<char>(std::toupper(*p));
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice first passage percolation over log-correlated Gaussian fields"};
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::string> text;
  std::map<std::string, bool> flags;
  std::map<std::string, std::vector<CLI::Option*>> options;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"estimate", "run the multiscale experiment and estimate lambda(d, xi)"},
      {"bounds", "bound reports and figure data"},
      {"dgamma", "solve for the fractal dimension d_gamma"},
      {"sample", "sample fields and write snapshots"},
      {"verify", "run the verification suite"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "config file (section.key = value lines)")->envname("LFPP_CONFIG");
    for (const auto& f : kFlags) {
      CLI::Option* opt = f.boolean ? sub->add_flag(f.flag, flags[f.key], f.help)
                                   : sub->add_option(f.flag, text[f.key], f.help);
      opt->envname(env_name(f.flag));
      options[f.key].push_back(opt);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    lfpp::RunConfig cfg;
    if (!config_path.empty()) cfg = lfpp::load_config(config_path);
    for (const auto& f : kFlags) {
      bool given = false;
      for (CLI::Option* opt : options[f.key]) given = given || opt->count() > 0;
      if (!given) continue;
      lfpp::apply_setting(cfg, f.key, f.boolean ? (flags[f.key] ? "true" : "false") : text[f.key]);
    }
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "estimate") return lfpp::cmd_estimate(cfg, std::cout);
    if (name == "bounds") return lfpp::cmd_bounds(cfg, std::cout);
    if (name == "dgamma") return lfpp::cmd_dgamma(cfg, std::cout);
    if (name == "sample") return lfpp::cmd_sample(cfg, std::cout);
    return lfpp::cmd_verify(cfg, std::cout);
  } catch (const lfpp::Error& e) {
    std::cerr << "lfpp: " << e.what() << '\n';
    return e.kind() == lfpp::ErrorKind::usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "lfpp: " << e.what() << '\n';
    return 1;
  }
}
