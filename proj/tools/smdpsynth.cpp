#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "smdpsynth/errors.hpp"
#include "smdpsynth/experiment.hpp"

using namespace smdpsynth;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::string out;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, Options& o, bool with_reps) {
  cmd->add_option("config", o.config, "scenario config (JSON); the built-in 4x4 grid when omitted");
  cmd->add_option("--seed", o.seed, "master seed");
  if (with_reps) cmd->add_option("--reps", o.reps, "repetitions")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, std::string("output directory (overrides $") + kOutputEnv + " and the config)");
  cmd->add_flag("--paper-scale", o.paper_scale, "5x5 running example, K = 20, paper-scale budgets");
}

ExperimentConfig resolve(const Options& o) {
  auto cfg = o.config.empty() ? default_config() : load_config(o.config);
  if (o.paper_scale) cfg = paper_scale(cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (o.reps) cfg.reps = *o.reps;
  if (!o.out.empty())
    cfg.out = o.out;
  else if (const char* env = std::getenv(kOutputEnv); env && *env)
    cfg.out = env;
  else if (cfg.out.empty())
    cfg.out = "out/" + cfg.name;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-based bounded synthesis for SMDPs under LTL specifications"};
  app.require_subcommand(1);
  Options run_opts, oracle_opts;
  auto* run = app.add_subcommand("run", "learn W, the transient policy and the risk policy; write the artifacts");
  add_common(run, run_opts, true);
  auto* oracle = app.add_subcommand("oracle", "exact W, W_p, reach probabilities and risk-optimal policy");
  add_common(oracle, oracle_opts, false);
  auto* check = app.add_subcommand("check", "quick self-test on built-in fixtures");
  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = resolve(run_opts);
      const auto summary = run_experiment(cfg, cfg.out);
      std::cout << summary.at("mean").dump(2) << "\nartifacts in " << cfg.out << '\n';
    } else if (*oracle) {
      const auto cfg = resolve(oracle_opts);
      auto doc = run_oracle(cfg, cfg.out);
      for (const char* key : {"winning", "max_reach", "pi_win"}) doc.erase(key);
      std::cout << doc.dump(2) << "\nwritten " << cfg.out << "/oracle.json\n";
    } else if (*check) {
      return run_self_check(std::cout) ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
