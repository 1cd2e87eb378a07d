#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "smdpsynth/errors.hpp"
#include "smdpsynth/experiment.hpp"

using namespace smdpsynth;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("smdpsynth_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<nlohmann::json> read_jsonl(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(nlohmann::json::parse(line));
  return out;
}

ExperimentConfig ring() { return load_config(std::string(SMDPSYNTH_SOURCE_DIR) + "/configs/ring.json"); }

ExperimentConfig quick_grid() {
  auto cfg = default_config();
  cfg.transient.episodes = 5000;
  cfg.paths = 3;
  cfg.horizon = 20;
  return cfg;
}

}  // namespace

TEST_CASE("config: parsing, defaults and errors") {
  const auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(R"({
    "scenario": {"grid": {"width": 4, "height": 4, "initial": [4, 4],
                          "labels": [{"ap": "a", "cells": [[1, 4]]}, {"ap": "c", "cells": [[3, 1]]}]},
                 "dwell": {"map": "literal"}},
    "formula": "G F a & G !c", "K": 3, "gamma_r": 0.5, "risk": {"kind": "quantile", "param": 0.1},
    "learner": {"episodes": 10, "patience": 2}, "reps": 4, "seed": 9})"));
  CHECK(cfg.grid->rate_map == RateMap::Literal);
  CHECK(cfg.bound == 3);
  CHECK(cfg.learner.episode_budget == 10);
  CHECK(cfg.learner.patience == 2);
  CHECK(cfg.learner.alpha == 0.2);
  CHECK(cfg.transient.rd.gamma == 0.9999);
  CHECK(cfg.transient.rd.gamma_acc == 0.9);
  CHECK(cfg.transient.rd.r_n == -1.0);
  CHECK(cfg.risk.kind == RiskFunctional::Kind::Quantile);
  CHECK(cfg.reps == 4);

  const auto back = ExperimentConfig::from_json(cfg.to_json());
  CHECK(back.hash() == cfg.hash());
  CHECK(back.to_json() == cfg.to_json());
  auto other = cfg;
  other.seed = 10;
  CHECK(other.hash() != cfg.hash());
  other = cfg;
  other.out = "elsewhere";
  CHECK(other.hash() == cfg.hash());

  auto parse = [](const char* text) { return ExperimentConfig::from_json(nlohmann::json::parse(text)); };
  CHECK_THROWS_AS(parse(R"({"formula": "G a"})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"scenario": {"grid": {}, "smdp": {}}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"scenario": {"grid": {}}, "reps": 0})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"scenario": {"grid": {}}, "gamma_r": 1.0})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"scenario": {"grid": {}}, "risk": {"kind": "cvar"}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"scenario": {"grid": {}}, "learner": {"alpha": 0}})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  CHECK(ring().smdp.is_object());
  CHECK_NOTHROW(load_config(std::string(SMDPSYNTH_SOURCE_DIR) + "/configs/grid4.json"));
  CHECK_NOTHROW(load_config(std::string(SMDPSYNTH_SOURCE_DIR) + "/configs/running_example.json"));
}

TEST_CASE("paper-scale preset and repetition seeds") {
  auto base = default_config();
  base.seed = 42;
  base.reps = 7;
  const auto p = paper_scale(base);
  CHECK(p.grid->width == 5);
  CHECK(p.bound == 20);
  CHECK(p.seed == 42);
  CHECK(p.reps == 7);
  CHECK(build_experiment_product(p).num_states() == 4294);

  std::set<std::uint64_t> seeds;
  for (std::size_t r = 0; r < 100; ++r) seeds.insert(repetition_seed(1, r));
  CHECK(seeds.size() == 100);
  CHECK(repetition_seed(1, 0) == repetition_seed(1, 0));
  CHECK(repetition_seed(1, 0) != repetition_seed(2, 0));
}

TEST_CASE("planning region") {
  const auto cfg = ring();
  const auto p = build_experiment_product(cfg);
  const auto w = exact_winning_region(p);
  PosteriorStore empty(p.base().num_states(), p.num_actions());
  CHECK(planning_region(p, w, empty).num_states() == 0);

  const auto r = run_pipeline(p, cfg, 0);
  REQUIRE(r.learned.converged);
  CHECK(r.plan.states == r.learned.region.states);
  CHECK(r.plan.pairs == r.learned.region.pairs);
  // Every plan state keeps an action, every plan pair some successor inside.
  for (StateId x : r.plan.state_list()) {
    CHECK_FALSE(r.model->allowed(x).empty());
    CHECK(r.plan.contains(x, r.combined[x]));
  }
}

TEST_CASE("pipeline on the ring fixture matches the oracle") {
  const auto cfg = ring();
  const auto p = build_experiment_product(cfg);
  const auto oracle = compute_oracle(p, cfg);
  CHECK(oracle.w.num_states() == 12);
  CHECK(oracle.w.num_pairs() == 19);
  const auto r = run_pipeline(p, cfg, repetition_seed(cfg.seed, 0), &oracle);
  const auto c = compare_to_oracle(p, r, oracle);
  CHECK(c.w_exact);
  CHECK(c.action_match == 1.0);
  REQUIRE(c.risk_gap.has_value());
  CHECK(*c.risk_gap < 1e-9);
  CHECK(c.reach_gap < 1e-9);
  CHECK(r.learned.observations.size() >= cfg.learner.min_observations);
  CHECK(r.risk_q->residual < 1e-9);
}

TEST_CASE("export_sample_paths") {
  const auto cfg = quick_grid();
  const auto p = build_experiment_product(cfg);
  const auto r = run_pipeline(p, cfg, 1);
  Rng rng = make_stream(1, 2);

  std::ostringstream none;
  export_sample_paths(none, p, r.combined, 0, 10, rng);
  const auto header_only = read_jsonl(none.str());
  REQUIRE(header_only.size() == 1);
  CHECK(header_only[0]["type"] == "header");
  CHECK(header_only[0]["paths"] == 0);

  std::ostringstream flat;
  export_sample_paths(flat, p, r.combined, 4, 0, rng);
  const auto single = read_jsonl(flat.str());
  REQUIRE(single.size() == 5);
  for (std::size_t i = 1; i < single.size(); ++i) {
    CHECK(single[i]["steps"].size() == 1);
    CHECK_FALSE(single[i]["steps"][0].contains("action"));
  }

  // Once a path is inside the learned W it never visits a c cell.
  std::ostringstream many;
  export_sample_paths(many, p, r.combined, 1000, 200, rng);
  const auto records = read_jsonl(many.str());
  REQUIRE(records.size() == 1001);
  std::size_t entered = 0, violations = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    bool inside = false;
    const auto& steps = records[i]["steps"];
    CHECK(steps.size() == 201);
    for (const auto& st : steps) {
      inside = inside || r.plan.contains(st["x"].get<StateId>());
      if (!inside) continue;
      for (const auto& l : st["labels"]) violations += l == "c";
      violations += st["accepting"].get<bool>();
    }
    entered += inside;
  }
  CHECK(entered == 1000);
  CHECK(violations == 0);
}

TEST_CASE("run_experiment: artifacts, averaging and determinism") {
  auto cfg = quick_grid();
  cfg.reps = 3;
  cfg.seed = 5;
  const auto a = scratch("a"), b = scratch("b");
  const auto summary = run_experiment(cfg, a);
  for (const char* f : {"indk.csv", "policy.json", "paths.jsonl", "summary.json"}) CHECK(fs::exists(a / f));

  cfg.threads = 1;
  run_experiment(cfg, b);
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
  CHECK(slurp(a / "indk.csv") == slurp(b / "indk.csv"));
  CHECK(slurp(a / "paths.jsonl") == slurp(b / "paths.jsonl"));

  CHECK(summary["reps"] == 3);
  CHECK(summary["runs"].size() == 3);
  CHECK(summary["oracle"]["w_states"] == 36);
  CHECK(summary["oracle"]["w_pairs"] == 69);
  for (const auto& run : summary["runs"]) {
    for (const char* key : {"w_states", "w_pairs", "observations", "final_ind"}) CHECK(run["learned"].contains(key));
    CHECK(run["risk"]["residual"].get<double>() < 1e-9);
    CHECK(run["oracle_comparison"].contains("reach_gap"));
    CHECK(run["learned"]["monotonicity_violations"] == 0);
  }
  CHECK(summary["mean"]["final_ind"] == 1.0);

  // Per-episode means over repetitions, nondecreasing, ending at 1.
  std::ifstream csv(a / "indk.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "k,ind_mean,ind_min,ind_max,w_states_mean,w_pairs_mean,running");
  double prev = 0.0;
  std::size_t rows = 0, longest = 0;
  for (const auto& run : summary["runs"]) longest = std::max<std::size_t>(longest, run["learned"]["episodes"]);
  while (std::getline(csv, line)) {
    ++rows;
    std::istringstream fields(line);
    std::string k, ind;
    std::getline(fields, k, ',');
    std::getline(fields, ind, ',');
    const double v = std::stod(ind);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
  CHECK(rows == longest);
  CHECK(prev == doctest::Approx(1.0));

  const auto policy = nlohmann::json::parse(slurp(a / "policy.json"));
  CHECK(policy["provenance"]["config_hash"] == cfg.hash());
  CHECK(policy["policy"]["actions"].size() > 0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("run_oracle") {
  const auto dir = scratch("oracle");
  const auto doc = run_oracle(quick_grid(), dir);
  CHECK(doc["product_states"] == 102);
  CHECK(doc["w_states"] == 36);
  CHECK(doc["w_pairs"] == 69);
  CHECK(doc["max_reach_initial"] == doctest::Approx(1.0));
  CHECK(fs::exists(dir / "oracle.json"));
  fs::remove_all(dir);
}

TEST_CASE("self check") {
  std::ostringstream out;
  CHECK(run_self_check(out));
  CHECK(out.str().find("FAIL") == std::string::npos);
}

TEST_CASE("command line: output directory precedence") {
  const std::string cli = SMDPSYNTH_CLI;
  const std::string config = std::string(SMDPSYNTH_SOURCE_DIR) + "/configs/ring.json";
  const auto env_dir = scratch("env"), flag_dir = scratch("flag");
  const std::string env = "SMDPSYNTH_OUT='" + env_dir.string() + "' ";
  CHECK(std::system((env + cli + " run " + config + " --reps 1 > /dev/null").c_str()) == 0);
  CHECK(fs::exists(env_dir / "summary.json"));
  CHECK(std::system((env + cli + " run " + config + " --reps 1 --seed 3 --out '" + flag_dir.string() + "' > /dev/null")
                        .c_str()) == 0);
  CHECK(fs::exists(flag_dir / "summary.json"));
  CHECK(nlohmann::json::parse(slurp(flag_dir / "summary.json"))["seed"] == 3);
  CHECK(std::system((cli + " oracle " + config + " --out '" + flag_dir.string() + "' > /dev/null").c_str()) == 0);
  CHECK(fs::exists(flag_dir / "oracle.json"));
  CHECK(std::system((cli + " run /nonexistent.json 2> /dev/null").c_str()) != 0);
  CHECK(std::system((cli + " bogus 2> /dev/null > /dev/null").c_str()) != 0);
  fs::remove_all(env_dir);
  fs::remove_all(flag_dir);
}
