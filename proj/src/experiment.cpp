#include "smdpsynth/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "smdpsynth/dkcba.hpp"
#include "smdpsynth/errors.hpp"
#include "smdpsynth/ltl_automaton.hpp"

namespace smdpsynth {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::ordered_json cell_json(Cell c) { return nlohmann::ordered_json::array({c.first, c.second}); }

nlohmann::ordered_json grid_json(const GridConfig& g) {
  nlohmann::ordered_json labels = nlohmann::ordered_json::array();
  for (const auto& [ap, cells] : g.labels) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& c : cells) list.push_back(cell_json(c));
    labels.push_back({{"ap", ap}, {"cells", list}});
  }
  return {{"width", g.width}, {"height", g.height}, {"initial", cell_json(g.initial)}, {"labels", labels}};
}

nlohmann::ordered_json dwell_json(const GridConfig& g) {
  switch (g.rate_map) {
    case RateMap::Default:
      return {{"map", "default"}};
    case RateMap::Literal:
      return {{"map", "literal"}};
    case RateMap::Table: {
      nlohmann::ordered_json table = nlohmann::ordered_json::array();
      for (const auto& [c, rate] : g.rate_table) table.push_back({{"cell", cell_json(c)}, {"rate", rate}});
      return {{"map", "table"}, {"table", table}};
    }
  }
  return {};
}

template <typename T>
void read(const nlohmann::json& doc, const char* key, T& field) {
  if (doc.contains(key)) field = doc.at(key).get<T>();
}

// Rethrows with the failing phase prepended to the message.
template <typename F>
auto in_phase(const char* phase, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(std::string(phase) + ": " + e.what());
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (grid.has_value() == !smdp.is_null()) throw ConfigError("scenario needs exactly one of grid or smdp");
  if (bound < 0) throw ConfigError("K must be nonnegative");
  if (reps < 1) throw ConfigError("repetitions must be at least 1");
  if (!(gamma_r >= 0.0 && gamma_r < 1.0)) throw ConfigError("gamma_r must lie in [0, 1)");
  if (risk.kind == RiskFunctional::Kind::Quantile && !(risk.param > 0.0 && risk.param <= 1.0))
    throw ConfigError("risk quantile level must lie in (0, 1]");
  if (risk.kind == RiskFunctional::Kind::MeanPlusSigma && !(risk.param >= 0.0))
    throw ConfigError("risk sigma weight must be nonnegative");
  learner.validate();
  transient.validate();
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  read(doc, "name", cfg.name);
  if (!doc.contains("scenario")) throw ConfigError("config needs a scenario");
  const auto& sc = doc.at("scenario");
  if (sc.contains("grid")) cfg.grid = GridConfig::from_json(sc.at("grid"), sc.value("dwell", nlohmann::json()));
  if (sc.contains("smdp")) cfg.smdp = sc.at("smdp");
  read(doc, "formula", cfg.formula);
  read(doc, "K", cfg.bound);
  if (doc.contains("learner")) {
    const auto& l = doc.at("learner");
    read(l, "alpha", cfg.learner.alpha);
    read(l, "posterior_period", cfg.learner.posterior_period);
    read(l, "episodes", cfg.learner.episode_budget);
    read(l, "step_cap", cfg.learner.step_cap);
    read(l, "temperature", cfg.learner.temperature);
    read(l, "epsilon", cfg.learner.epsilon);
    read(l, "patience", cfg.learner.patience);
    read(l, "min_tries", cfg.learner.min_tries);
    read(l, "min_observations", cfg.learner.min_observations);
  }
  if (doc.contains("priors")) {
    const auto& pr = doc.at("priors");
    read(pr, "dirichlet", cfg.learner.priors.dirichlet);
    read(pr, "gamma_shape", cfg.learner.priors.gamma_shape);
    read(pr, "gamma_rate", cfg.learner.priors.gamma_rate);
  }
  if (doc.contains("transient")) {
    const auto& t = doc.at("transient");
    read(t, "episodes", cfg.transient.episodes);
    read(t, "step_cap", cfg.transient.step_cap);
    read(t, "rate_constant", cfg.transient.rate_constant);
    read(t, "epsilon", cfg.transient.epsilon);
  }
  read(doc, "gamma", cfg.transient.rd.gamma);
  read(doc, "gamma_acc", cfg.transient.rd.gamma_acc);
  read(doc, "r_n", cfg.transient.rd.r_n);
  read(doc, "gamma_r", cfg.gamma_r);
  if (doc.contains("risk")) {
    const auto& r = doc.at("risk");
    const auto kind = r.value("kind", std::string("mean_plus_sigma"));
    if (kind == "mean_plus_sigma")
      cfg.risk = RiskFunctional::mean_plus_sigma(r.value("param", 1.0));
    else if (kind == "quantile")
      cfg.risk = RiskFunctional::quantile(r.value("param", 0.05));
    else
      throw ConfigError("unknown risk functional '" + kind + "'");
  }
  read(doc, "reps", cfg.reps);
  read(doc, "seed", cfg.seed);
  read(doc, "out", cfg.out);
  if (doc.contains("paths")) {
    read(doc.at("paths"), "n", cfg.paths);
    read(doc.at("paths"), "horizon", cfg.horizon);
  }
  read(doc, "oracle_limit", cfg.oracle_limit);
  read(doc, "threads", cfg.threads);
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json scenario;
  if (grid) {
    scenario["grid"] = grid_json(*grid);
    scenario["dwell"] = dwell_json(*grid);
  } else {
    scenario["smdp"] = smdp;
  }
  const auto& l = learner;
  return {{"name", name},
          {"scenario", scenario},
          {"formula", formula},
          {"K", bound},
          {"learner",
           {{"alpha", l.alpha},
            {"posterior_period", l.posterior_period},
            {"episodes", l.episode_budget},
            {"step_cap", l.step_cap},
            {"temperature", l.temperature},
            {"epsilon", l.epsilon},
            {"patience", l.patience},
            {"min_tries", l.min_tries},
            {"min_observations", l.min_observations}}},
          {"priors",
           {{"dirichlet", l.priors.dirichlet}, {"gamma_shape", l.priors.gamma_shape},
            {"gamma_rate", l.priors.gamma_rate}}},
          {"transient",
           {{"episodes", transient.episodes},
            {"step_cap", transient.step_cap},
            {"rate_constant", transient.rate_constant},
            {"epsilon", transient.epsilon}}},
          {"gamma", transient.rd.gamma},
          {"gamma_acc", transient.rd.gamma_acc},
          {"r_n", transient.rd.r_n},
          {"gamma_r", gamma_r},
          {"risk",
           {{"kind", risk.kind == RiskFunctional::Kind::Quantile ? "quantile" : "mean_plus_sigma"},
            {"param", risk.param}}},
          {"reps", reps},
          {"seed", seed},
          {"out", out},
          {"paths", {{"n", paths}, {"horizon", horizon}}},
          {"oracle_limit", oracle_limit}};
}

std::string ExperimentConfig::hash() const {
  auto doc = to_json();
  doc.erase("out");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.name = "grid4";
  GridConfig g;
  g.width = 4;
  g.height = 4;
  g.initial = {4, 4};
  g.labels = {{"a", {{1, 4}}}, {"b", {{2, 4}}}, {"c", {{3, 1}, {3, 2}}}};
  cfg.grid = g;
  cfg.learner.patience = 20;
  cfg.learner.step_cap = 200;
  cfg.learner.episode_budget = 100'000;
  return cfg;
}

ExperimentConfig paper_scale(ExperimentConfig base) {
  base.name = "paper_scale";
  base.grid = GridConfig{};
  base.smdp = nullptr;
  base.formula = "G F a & G F b & G !c";
  base.bound = 20;
  base.learner.episode_budget = 20'000;
  base.learner.patience = 500;
  base.learner.step_cap = 4000;
  base.learner.min_observations = 0;
  base.transient.episodes = 20'000'000;
  base.transient.rd = RewardDiscount{};
  base.gamma_r = 0.9;
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(doc);
}

Smdp build_scenario(const ExperimentConfig& cfg) {
  cfg.validate();
  return cfg.grid ? build_gridworld(*cfg.grid) : Smdp::from_json(cfg.smdp);
}

ProductSmdp build_experiment_product(const ExperimentConfig& cfg) {
  const auto m = build_scenario(cfg);
  const auto phi = ltl::parse(cfg.formula);
  const auto cba = ltl_to_cba(phi, {m.atomic_props()});
  return build_product(m, determinize_kcba(cba, cfg.bound));
}

std::uint64_t repetition_seed(std::uint64_t master, std::size_t rep) {
  return mix64(mix64(master) ^ (0xa0761d6478bd642fULL * (rep + 1)));
}

Oracle compute_oracle(const ProductSmdp& p, const ExperimentConfig& cfg) {
  Oracle o;
  o.w = exact_winning_region(p);
  o.max_reach = exact_max_reach_probability(p, o.w.states);
  o.model = exact_risk_model(p, o.w, cfg.risk, cfg.gamma_r);
  o.q = risk_value_iteration(o.model);
  o.pi_win = extract_pi_win(o.model, o.q);
  o.value = evaluate_policy_risk(o.model, o.pi_win);
  return o;
}

WinningRegion planning_region(const ProductSmdp& p, const WinningRegion& w, const PosteriorStore& post) {
  WinningRegion r = w;
  const std::size_t na = p.num_actions();
  for (StateId x = 0; x < p.num_states(); ++x)
    for (ActionId a = 0; a < na; ++a)
      if (r.contains(x, a) && !post.tracked(p.state(x).s, a)) r.pairs[x * na + a] = false;
  for (bool changed = true; changed;) {
    changed = false;
    for (StateId x = 0; x < p.num_states(); ++x) {
      if (!r.states[x]) continue;
      bool any = false;
      for (ActionId a = 0; a < na; ++a) {
        if (!r.contains(x, a)) continue;
        bool inside = false;
        for (StateId s : post.support(p.state(x).s, a)) {
          const auto y = p.successor(x, s);
          inside = inside || (y && r.states[*y]);
        }
        if (!inside) {
          r.pairs[x * na + a] = false;
          changed = true;
        }
        any = any || inside;
      }
      if (!any) {
        r.states[x] = false;
        changed = true;
      }
    }
  }
  return r;
}

PipelineResult run_pipeline(const ProductSmdp& p, const ExperimentConfig& cfg, std::uint64_t seed,
                            const Oracle* oracle) {
  LearnerConfig lc = cfg.learner;
  lc.seed = seed;
  PipelineResult r{
      in_phase("winning-region learning", [&] { return learn_winning_region(p, lc, oracle ? &oracle->w : nullptr); })};
  r.plan = planning_region(p, r.learned.region, r.learned.posterior);
  TransientConfig tc = cfg.transient;
  tc.seed = seed;
  r.transient = in_phase("transient Q-learning", [&] { return qlearn_transient(p, r.plan.states, tc); });
  r.pi_tr = extract_pi_tr(p, r.transient);
  r.pi_win.assign(p.num_states(), kNoAction);
  if (r.plan.num_states() > 0) {
    in_phase("risk planning", [&] {
      r.model = estimated_risk_model(p, r.plan, r.learned.posterior, cfg.risk, cfg.gamma_r);
      r.risk_q = risk_value_iteration(*r.model);
      r.pi_win = extract_pi_win(*r.model, *r.risk_q);
      return 0;
    });
  }
  r.combined = combine_policy(r.pi_win, r.pi_tr, r.plan.states);
  return r;
}

PolicyComparison compare_to_oracle(const ProductSmdp& p, const PipelineResult& r, const Oracle& oracle) {
  PolicyComparison c;
  const std::size_t na = p.num_actions();
  c.w_exact = r.learned.region.states == oracle.w.states && r.learned.region.pairs == oracle.w.pairs;
  std::size_t match = 0;
  for (StateId x = 0; x < p.num_states(); ++x) {
    const ActionId a = r.combined[x];
    if (oracle.w.contains(x)) {
      ++c.compared;
      const double best = oracle.q.value(x, oracle.pi_win[x], na);
      if (oracle.w.contains(x, a) && oracle.q.value(x, a, na) <= best + 1e-9 * std::max(1.0, best)) ++match;
    } else if (!p.is_accepting(x)) {
      ++c.compared;
      double got = 0.0;
      for (const auto& o : p.outcomes(x, a)) got += o.prob * oracle.max_reach[o.next];
      if (got >= oracle.max_reach[x] - 1e-9) ++match;
    }
  }
  c.action_match = c.compared ? static_cast<double>(match) / static_cast<double>(c.compared) : 1.0;
  try {
    PositionalPolicy inside(p.num_states(), kNoAction);
    for (StateId x : oracle.w.state_list()) inside[x] = r.combined[x];
    const auto v = evaluate_policy_risk(oracle.model, inside);
    double gap = 0.0;
    for (StateId x : oracle.w.state_list())
      gap = std::max(gap, oracle.value[x] > 0.0 ? v[x] / oracle.value[x] - 1.0 : v[x] - oracle.value[x]);
    c.risk_gap = gap;
  } catch (const PolicyLeavesW&) {
    c.risk_gap.reset();
  }
  const auto reach = policy_reach_probability(p, r.combined, oracle.w.states);
  for (StateId x = 0; x < p.num_states(); ++x)
    if (!oracle.w.contains(x)) c.reach_gap = std::max(c.reach_gap, oracle.max_reach[x] - reach[x]);
  return c;
}

void export_sample_paths(std::ostream& out, const ProductSmdp& p, const PositionalPolicy& pi, std::size_t n,
                         std::size_t horizon, Rng& rng) {
  const auto& m = p.base();
  out << nlohmann::ordered_json{{"type", "header"},
                                {"paths", n},
                                {"horizon", horizon},
                                {"start", p.initial()},
                                {"actions", m.num_actions()},
                                {"ap", m.atomic_props()}}
             .dump()
      << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    StateId x = p.initial();
    for (std::size_t k = 0;; ++k) {
      const StateId s = p.state(x).s;
      nlohmann::ordered_json step{{"x", x},
                                  {"state", m.state_name(s)},
                                  {"q", p.state(x).q},
                                  {"labels", m.label_names(s)},
                                  {"accepting", p.is_accepting(x)}};
      if (k == horizon) {
        steps.push_back(std::move(step));
        break;
      }
      const ActionId a = pi.at(x);
      if (a == kNoAction || !m.is_enabled(s, a)) throw DomainGap("policy undefined at product state " + std::to_string(x));
      const auto st = p.sample_step(x, a, rng);
      step["action"] = m.action_name(a);
      step["dwell"] = st.tau;
      steps.push_back(std::move(step));
      x = st.next;
    }
    out << nlohmann::ordered_json{{"type", "path"}, {"id", i}, {"steps", std::move(steps)}}.dump() << '\n';
  }
}

nlohmann::ordered_json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  cfg.validate();
  const auto p = in_phase("building the product", [&] { return build_experiment_product(cfg); });
  std::optional<Oracle> oracle;
  if (p.num_states() <= cfg.oracle_limit) oracle = in_phase("oracle", [&] { return compute_oracle(p, cfg); });
  const Oracle* op = oracle ? &*oracle : nullptr;

  std::vector<std::optional<PipelineResult>> results(cfg.reps);
  std::vector<std::exception_ptr> errors(cfg.reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cfg.reps;) {
      try {
        results[i] = run_pipeline(p, cfg, repetition_seed(cfg.seed, i), op);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t threads = std::min(cfg.reps, cfg.threads ? cfg.threads : hw);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < cfg.reps; ++i)
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const Error& e) {
        throw Error("repetition " + std::to_string(i) + ": " + e.what());
      }
    }

  std::filesystem::create_directories(dir);

  // Per-episode means over repetitions; finished runs keep their last value.
  std::size_t longest = 0;
  for (const auto& r : results) longest = std::max(longest, r->learned.progress.size());
  std::ostringstream indk;
  indk << "k,ind_mean,ind_min,ind_max,w_states_mean,w_pairs_mean,running\n";
  indk.precision(10);
  for (std::size_t k = 0; k < longest; ++k) {
    double ind = 0.0, lo = kNaN, hi = kNaN, ws = 0.0, wp = 0.0;
    std::size_t running = 0, with_ind = 0;
    for (const auto& r : results) {
      const auto& prog = r->learned.progress;
      if (prog.empty()) continue;
      const auto& rec = prog[std::min(k, prog.size() - 1)];
      running += k < prog.size();
      ws += static_cast<double>(rec.w_states);
      wp += static_cast<double>(rec.w_pairs);
      if (std::isfinite(rec.ind)) {
        ++with_ind;
        ind += rec.ind;
        lo = std::isnan(lo) ? rec.ind : std::min(lo, rec.ind);
        hi = std::isnan(hi) ? rec.ind : std::max(hi, rec.ind);
      }
    }
    const double reps = static_cast<double>(cfg.reps);
    indk << k + 1 << ',';
    if (with_ind)
      indk << ind / static_cast<double>(with_ind) << ',' << lo << ',' << hi;
    else
      indk << ",,";
    indk << ',' << ws / reps << ',' << wp / reps << ',' << running << '\n';
  }
  write_file(dir / "indk.csv", indk.str());

  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  std::vector<double> final_ind, observations, reach_gap, match, risk_gap, exact;
  for (std::size_t i = 0; i < cfg.reps; ++i) {
    const auto& r = *results[i];
    const auto& l = r.learned;
    const double ind = l.progress.empty() ? kNaN : l.progress.back().ind;
    nlohmann::ordered_json run{
        {"rep", i},
        {"seed", repetition_seed(cfg.seed, i)},
        {"learned",
         {{"w_states", l.region.num_states()},
          {"w_pairs", l.region.num_pairs()},
          {"converged", l.converged},
          {"episodes", l.episodes},
          {"steps", l.steps},
          {"observations", l.observations.size()},
          {"monotonicity_violations", l.violations},
          {"final_ind", number_or_null(ind)}}},
        {"planning", {{"w_states", r.plan.num_states()}, {"w_pairs", r.plan.num_pairs()}}},
        {"transient", {{"updates", r.transient.updates}, {"tail_change", r.transient.tail_change}}},
        {"risk",
         r.risk_q ? nlohmann::ordered_json{{"iterations", r.risk_q->iterations},
                                           {"residual", r.risk_q->residual},
                                           {"renormalized_pairs", r.model->renormalized},
                                           {"dropped_mass", r.model->dropped_mass}}
                  : nlohmann::ordered_json(nullptr)}};
    final_ind.push_back(ind);
    observations.push_back(static_cast<double>(l.observations.size()));
    if (oracle) {
      const auto c = compare_to_oracle(p, r, *oracle);
      run["oracle_comparison"] = {{"w_exact", c.w_exact},
                                  {"action_match", c.action_match},
                                  {"compared_states", c.compared},
                                  {"risk_gap", c.risk_gap ? nlohmann::ordered_json(*c.risk_gap) : nullptr},
                                  {"reach_gap", c.reach_gap}};
      reach_gap.push_back(c.reach_gap);
      match.push_back(c.action_match);
      exact.push_back(c.w_exact ? 1.0 : 0.0);
      if (c.risk_gap) risk_gap.push_back(*c.risk_gap);
    }
    runs.push_back(std::move(run));
  }

  nlohmann::ordered_json summary{{"name", cfg.name},
                                 {"config_hash", cfg.hash()},
                                 {"seed", cfg.seed},
                                 {"reps", cfg.reps},
                                 {"product",
                                  {{"states", p.num_states()},
                                   {"actions", p.num_actions()},
                                   {"smdp_states", p.base().num_states()},
                                   {"automaton_states", p.automaton().num_states()},
                                   {"accepting_states", p.accepting_states().size()}}}};
  if (oracle) {
    summary["oracle"] = {{"w_states", oracle->w.num_states()},
                         {"w_pairs", oracle->w.num_pairs()},
                         {"max_reach_initial", oracle->max_reach[p.initial()]},
                         {"risk_residual", oracle->q.residual}};
  } else {
    summary["oracle"] = nullptr;
  }
  summary["mean"] = {{"final_ind", number_or_null(mean_of(final_ind))},
                     {"observations", mean_of(observations)},
                     {"w_exact", number_or_null(mean_of(exact))},
                     {"action_match", number_or_null(mean_of(match))},
                     {"risk_gap", number_or_null(mean_of(risk_gap))},
                     {"reach_gap", number_or_null(mean_of(reach_gap))}};
  summary["runs"] = std::move(runs);
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  const auto& first = *results[0];
  std::vector<double> values(p.num_states(), kNaN);
  if (first.risk_q)
    for (StateId x : first.plan.state_list()) values[x] = first.risk_q->value(x, first.pi_win[x], p.num_actions());
  const auto reach_values = greedy_values(p, first.transient);
  for (StateId x = 0; x < p.num_states(); ++x)
    if (!first.plan.contains(x)) values[x] = reach_values[x];
  nlohmann::ordered_json policy{
      {"provenance",
       {{"config_hash", cfg.hash()},
        {"seed", repetition_seed(cfg.seed, 0)},
        {"observations", first.learned.observations.size()},
        {"risk_iterations", first.risk_q ? first.risk_q->iterations : 0},
        {"risk_residual", first.risk_q ? number_or_null(first.risk_q->residual) : nullptr},
        {"transient_tail_change", first.transient.tail_change}}},
      {"values_note", "V^Risk estimate inside the planning region, greedy transient Q value outside"},
      {"winning", winning_region_to_json(first.plan)},
      {"policy", policy_to_json(p, first.combined, values)},
      {"states", p.to_json()}};
  write_file(dir / "policy.json", policy.dump(2) + "\n");

  std::ostringstream paths;
  Rng rng = make_stream(repetition_seed(cfg.seed, 0), 2);
  export_sample_paths(paths, p, first.combined, cfg.paths, cfg.horizon, rng);
  write_file(dir / "paths.jsonl", paths.str());
  return summary;
}

nlohmann::ordered_json run_oracle(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  const auto p = build_experiment_product(cfg);
  const auto o = compute_oracle(p, cfg);
  const std::size_t na = p.num_actions();
  std::vector<double> reach(o.max_reach);
  nlohmann::ordered_json doc{{"name", cfg.name},
                             {"config_hash", cfg.hash()},
                             {"product_states", p.num_states()},
                             {"accepting_states", p.accepting_states().size()},
                             {"w_states", o.w.num_states()},
                             {"w_pairs", o.w.num_pairs()},
                             {"max_reach_initial", o.max_reach[p.initial()]},
                             {"risk_iterations", o.q.iterations},
                             {"risk_residual", o.q.residual}};
  if (o.w.contains(p.initial())) doc["risk_value_initial"] = o.value[p.initial()];
  std::vector<double> values(p.num_states(), kNaN);
  for (StateId x : o.w.state_list()) values[x] = o.q.value(x, o.pi_win[x], na);
  doc["winning"] = winning_region_to_json(o.w);
  doc["max_reach"] = reach;
  doc["pi_win"] = policy_to_json(p, o.pi_win, values);
  std::filesystem::create_directories(dir);
  write_file(dir / "oracle.json", doc.dump(2) + "\n");
  return doc;
}

bool run_self_check(std::ostream& out) {
  bool all = true;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    all = all && ok;
  };
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      report(name, false, e.what());
    }
  };

  auto cfg = default_config();
  std::optional<ProductSmdp> product;
  guarded("automaton", [&] {
    const auto cba = ltl_to_cba(ltl::parse(cfg.formula), {{"a", "b", "c"}});
    const auto d = determinize_kcba(cba, cfg.bound);
    std::size_t bad = 0;
    for (StateId q = 0; q < d.num_states(); ++q)
      for (Letter l = 0; l < d.automaton.num_letters(); ++l) {
        const auto succ = d.automaton.successors(q, l);
        if (succ.size() != 1) ++bad;
        if (d.is_sink(q) && succ.size() == 1 && succ.front() != q) ++bad;
      }
    std::size_t accepting = 0;
    for (StateId q = 0; q < d.num_states(); ++q) accepting += d.automaton.is_accepting(q);
    report("automaton", bad == 0 && accepting <= 1,
           std::to_string(cba.num_states()) + "-state cBA, " + std::to_string(d.num_states()) + "-state dKcBA, " +
               std::to_string(bad) + " structural violations");
  });
  guarded("oracle", [&] {
    product = build_experiment_product(cfg);
    const auto w = exact_winning_region(*product);
    report("oracle", w.num_states() == 36 && w.num_pairs() == 69,
           std::to_string(product->num_states()) + " product states, |W| = " + std::to_string(w.num_states()) +
               ", |W_p| = " + std::to_string(w.num_pairs()));
  });
  if (!product) return false;
  const auto oracle = compute_oracle(*product, cfg);
  std::optional<PipelineResult> r;
  guarded("pipeline", [&] {
    r = run_pipeline(*product, cfg, repetition_seed(0, 0), &oracle);
    const auto c = compare_to_oracle(*product, *r, oracle);
    report("pipeline", c.w_exact && r->learned.violations == 0 && c.reach_gap < 0.02 && r->risk_q->residual < 1e-9,
           std::string("W ") + (c.w_exact ? "exact" : "differs") + ", reach gap " + std::to_string(c.reach_gap) +
               ", VI residual " + std::to_string(r->risk_q->residual));
  });
  if (!r) return false;
  guarded("safety", [&] {
    Rng rng = make_stream(1, 3);
    std::size_t hits = 0;
    const auto states = r->plan.state_list();
    for (std::size_t i = 0; i < 100; ++i) {
      StateId x = states[i % states.size()];
      for (std::size_t k = 0; k < 1000; ++k) {
        x = product->sample_step(x, r->combined[x], rng).next;
        hits += product->is_accepting(x);
      }
    }
    report("safety", hits == 0, "100 rollouts of 1000 steps from W, " + std::to_string(hits) + " accepting visits");
  });
  return all;
}

}  // namespace smdpsynth
