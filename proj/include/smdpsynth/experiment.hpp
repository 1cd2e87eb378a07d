#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smdpsynth/gridworld.hpp"
#include "smdpsynth/learner.hpp"
#include "smdpsynth/qlearning.hpp"
#include "smdpsynth/risk.hpp"

namespace smdpsynth {

/// Environment variable that overrides the output directory of a config.
inline constexpr const char* kOutputEnv = "SMDPSYNTH_OUT";

struct ExperimentConfig {
  std::string name = "experiment";
  /// Exactly one scenario: a grid, or a generic SMDP table document.
  std::optional<GridConfig> grid;
  nlohmann::json smdp;
  std::string formula = "G F a & G F b & G !c";
  int bound = 5;
  LearnerConfig learner;
  TransientConfig transient;
  double gamma_r = 0.9;
  RiskFunctional risk = RiskFunctional::mean_plus_sigma(1.0);
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t paths = 10;
  std::size_t horizon = 100;
  /// Oracles are computed when the product has at most this many states.
  std::size_t oracle_limit = 100'000;
  std::size_t threads = 0;  ///< 0: one per hardware thread

  /// Throws ConfigError.
  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;
  /// FNV-1a of the serialized config, as 16 hex digits.
  std::string hash() const;
};

/// Desk-scale defaults: 4x4 grid, K = 5.
ExperimentConfig default_config();
/// The 5x5 running example with K = 20 and paper-scale budgets, keeping the
/// seed, repetitions, output and risk settings of `base`.
ExperimentConfig paper_scale(ExperimentConfig base);
ExperimentConfig load_config(const std::filesystem::path& path);

Smdp build_scenario(const ExperimentConfig& cfg);
ProductSmdp build_experiment_product(const ExperimentConfig& cfg);

/// Seed of repetition `rep` derived from the master seed.
std::uint64_t repetition_seed(std::uint64_t master, std::size_t rep);

/// Ground truth from the known model.
struct Oracle {
  WinningRegion w;
  std::vector<double> max_reach;  ///< to W
  RiskModel model;
  RiskQ q;
  PositionalPolicy pi_win;
  std::vector<double> value;  ///< V^Risk of pi_win on W
};

Oracle compute_oracle(const ProductSmdp& p, const ExperimentConfig& cfg);

/// Largest sub-region of `w` whose pairs all have data and keep some
/// estimated successor inside.
WinningRegion planning_region(const ProductSmdp& p, const WinningRegion& w, const PosteriorStore& post);

struct PipelineResult {
  LearnerResult learned;
  WinningRegion plan{};
  TransientQ transient{};
  PositionalPolicy pi_tr{};
  std::optional<RiskModel> model{};
  std::optional<RiskQ> risk_q{};
  PositionalPolicy pi_win{};
  PositionalPolicy combined{};
};

/// Phase 1 (winning-region learning), phase 2 (transient Q-learning outside
/// the planning region) and phase 3 (risk value iteration inside it), then the
/// combined policy. Errors are rethrown with the phase as context.
PipelineResult run_pipeline(const ProductSmdp& p, const ExperimentConfig& cfg, std::uint64_t seed,
                            const Oracle* oracle = nullptr);

struct PolicyComparison {
  bool w_exact = false;
  /// Share of the compared states (W plus non-accepting states outside W)
  /// whose action is optimal for the oracle: argmin Q^Risk on W, argmax
  /// reach probability outside.
  double action_match = 0.0;
  std::size_t compared = 0;
  /// max over W of V^Risk / V^Risk_opt - 1 under the true model; nullopt when
  /// the policy leaves the true W.
  std::optional<double> risk_gap;
  /// max over states outside W of max reach - reach of the combined policy.
  double reach_gap = 0.0;
};

PolicyComparison compare_to_oracle(const ProductSmdp& p, const PipelineResult& r, const Oracle& oracle);

/// JSONL: a header record, then one record per path from the initial state
/// with product state, SMDP state, labels, action and dwell time per step.
/// The last step of a path has no action.
void export_sample_paths(std::ostream& out, const ProductSmdp& p, const PositionalPolicy& pi, std::size_t n,
                         std::size_t horizon, Rng& rng);

/// Runs all repetitions and writes indk.csv, policy.json, paths.jsonl and
/// summary.json into `dir`. Returns the summary.
nlohmann::ordered_json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Exact W, W_p, reach and risk-optimal policy; writes oracle.json into `dir`.
nlohmann::ordered_json run_oracle(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Quick end-to-end checks on built-in fixtures, one PASS/FAIL line each.
/// Returns true when all pass.
bool run_self_check(std::ostream& out);

}  // namespace smdpsynth
