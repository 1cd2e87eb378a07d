#include "smdpsynth/smdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smdpsynth/errors.hpp"

namespace smdpsynth {

DwellDistribution DwellDistribution::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("exponential dwell rate must be positive");
  DwellDistribution d;
  d.kind_ = Kind::Exponential;
  d.rate_ = rate;
  return d;
}

DwellDistribution DwellDistribution::empirical(std::vector<double> samples) {
  if (samples.empty()) throw ConfigError("empirical dwell distribution needs samples");
  for (double x : samples)
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("dwell samples must be finite and nonnegative");
  std::sort(samples.begin(), samples.end());
  DwellDistribution d;
  d.kind_ = Kind::Empirical;
  d.samples_ = std::move(samples);
  return d;
}

double DwellDistribution::rate() const {
  if (kind_ != Kind::Exponential) throw Error("rate() on an empirical dwell distribution");
  return rate_;
}

double DwellDistribution::sample(Rng& rng) const {
  if (kind_ == Kind::Exponential) return std::exponential_distribution<double>(rate_)(rng);
  return samples_[std::uniform_int_distribution<std::size_t>(0, samples_.size() - 1)(rng)];
}

double DwellDistribution::mean() const {
  if (kind_ == Kind::Exponential) return 1.0 / rate_;
  return std::accumulate(samples_.begin(), samples_.end(), 0.0) / static_cast<double>(samples_.size());
}

double DwellDistribution::variance() const {
  if (kind_ == Kind::Exponential) return 1.0 / (rate_ * rate_);
  const double m = mean();
  double ss = 0.0;
  for (double x : samples_) ss += (x - m) * (x - m);
  return ss / static_cast<double>(samples_.size());
}

double DwellDistribution::survival(double t) const {
  if (t < 0.0) return 1.0;
  if (kind_ == Kind::Exponential) return std::exp(-rate_ * t);
  const auto above = samples_.end() - std::upper_bound(samples_.begin(), samples_.end(), t);
  return static_cast<double>(above) / static_cast<double>(samples_.size());
}

double DwellDistribution::quantile(double alpha) const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("quantile level must lie in (0, 1]");
  if (kind_ == Kind::Exponential) return -std::log(alpha) / rate_;
  // survival is a right-continuous step function; the infimum is attained at a sample.
  if (survival(0.0) < alpha) return 0.0;
  for (double x : samples_)
    if (survival(x) < alpha) return x;
  return samples_.back();
}

nlohmann::json DwellDistribution::to_json() const {
  if (kind_ == Kind::Exponential) return {{"exp", rate_}};
  return {{"empirical", samples_}};
}

DwellDistribution DwellDistribution::from_json(const nlohmann::json& doc) {
  if (doc.contains("exp")) return exponential(doc.at("exp").get<double>());
  if (doc.contains("empirical")) return empirical(doc.at("empirical").get<std::vector<double>>());
  throw ConfigError("dwell entry needs 'exp' or 'empirical'");
}

Smdp::Smdp(std::vector<std::string> state_names, std::vector<std::string> action_names,
           std::vector<std::string> atomic_props)
    : state_names_(std::move(state_names)), action_names_(std::move(action_names)),
      ap_(std::move(atomic_props)), labels_(state_names_.size(), 0),
      rows_(state_names_.size() * action_names_.size()) {
  if (state_names_.empty()) throw ConfigError("SMDP needs at least one state");
  if (action_names_.empty()) throw ConfigError("SMDP needs at least one action");
  if (ap_.size() > 16) throw CapacityExceeded("at most 16 atomic propositions supported");
}

void Smdp::check_state(StateId s) const {
  if (s >= num_states()) throw UnknownState("SMDP state " + std::to_string(s) + " out of range");
}

void Smdp::check_action(ActionId a) const {
  if (a >= num_actions()) throw ConfigError("action " + std::to_string(a) + " out of range");
}

void Smdp::require_finalized() const {
  if (!finalized_) throw Error("SMDP queried before finalize()");
}

const std::string& Smdp::state_name(StateId s) const {
  check_state(s);
  return state_names_[s];
}

const std::string& Smdp::action_name(ActionId a) const {
  check_action(a);
  return action_names_[a];
}

StateId Smdp::state_index(const std::string& name) const {
  auto it = std::find(state_names_.begin(), state_names_.end(), name);
  if (it == state_names_.end()) throw UnknownState("no SMDP state named '" + name + "'");
  return static_cast<StateId>(it - state_names_.begin());
}

ActionId Smdp::action_index(const std::string& name) const {
  auto it = std::find(action_names_.begin(), action_names_.end(), name);
  if (it == action_names_.end()) throw ConfigError("no action named '" + name + "'");
  return static_cast<ActionId>(it - action_names_.begin());
}

Letter Smdp::label(StateId s) const {
  check_state(s);
  return labels_[s];
}

std::vector<std::string> Smdp::label_names(StateId s) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ap_.size(); ++i)
    if (label(s) & (Letter{1} << i)) out.push_back(ap_[i]);
  return out;
}

void Smdp::set_initial(StateId s) {
  check_state(s);
  initial_ = s;
}

void Smdp::set_label(StateId s, Letter label) {
  check_state(s);
  if (label >> ap_.size()) throw AlphabetMismatch("label uses propositions outside AP");
  labels_[s] = label;
}

void Smdp::add_transition(StateId s, ActionId a, StateId next, double prob, DwellDistribution dwell) {
  if (finalized_) throw Error("SMDP is frozen");
  check_state(s);
  check_state(next);
  check_action(a);
  if (!(prob >= 0.0 && prob <= 1.0 + 1e-12)) throw ConfigError("transition probability outside [0, 1]");
  if (prob == 0.0) return;
  auto& row = rows_[s * num_actions() + a];
  auto it = std::lower_bound(row.begin(), row.end(), next,
                             [](const Outcome& o, StateId x) { return o.next < x; });
  if (it != row.end() && it->next == next) {
    it->prob += prob;
    it->dwell = std::move(dwell);
  } else {
    row.insert(it, Outcome{next, prob, std::move(dwell)});
  }
}

void Smdp::finalize() {
  enabled_.assign(num_states(), {});
  for (StateId s = 0; s < num_states(); ++s) {
    for (ActionId a = 0; a < num_actions(); ++a) {
      const auto& row = rows_[s * num_actions() + a];
      if (row.empty()) continue;
      double total = 0.0;
      for (const auto& o : row) total += o.prob;
      if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("T(.|" + state_names_[s] + "," + action_names_[a] + ") sums to " + std::to_string(total));
      enabled_[s].push_back(a);
    }
    if (enabled_[s].empty()) throw ConfigError("state " + state_names_[s] + " has no enabled action");
  }
  finalized_ = true;
}

std::span<const ActionId> Smdp::enabled_actions(StateId s) const {
  require_finalized();
  check_state(s);
  return enabled_[s];
}

bool Smdp::is_enabled(StateId s, ActionId a) const {
  check_state(s);
  check_action(a);
  return !rows_[s * num_actions() + a].empty();
}

std::span<const Outcome> Smdp::outcomes(StateId s, ActionId a) const {
  check_state(s);
  check_action(a);
  return rows_[s * num_actions() + a];
}

double Smdp::prob(StateId s, ActionId a, StateId next) const {
  for (const auto& o : outcomes(s, a))
    if (o.next == next) return o.prob;
  return 0.0;
}

const DwellDistribution& Smdp::dwell(StateId s, ActionId a, StateId next) const {
  for (const auto& o : outcomes(s, a))
    if (o.next == next) return o.dwell;
  throw ConfigError("no transition " + state_name(s) + " -" + action_name(a) + "-> " + state_name(next));
}

Step Smdp::sample_step(StateId s, ActionId a, Rng& rng) const {
  const auto row = outcomes(s, a);
  if (row.empty()) throw ActionNotEnabled("action " + action_names_[a] + " not enabled in " + state_names_[s]);
  double u = uniform01(rng);
  const Outcome* pick = &row.back();
  for (const auto& o : row) {
    if (u < o.prob) {
      pick = &o;
      break;
    }
    u -= o.prob;
  }
  return {pick->next, pick->dwell.sample(rng)};
}

Path Smdp::simulate(const SmdpPolicy& policy, std::size_t horizon, Rng& rng) const {
  return simulate_from(initial_, policy, horizon, rng);
}

Path Smdp::simulate_from(StateId start, const SmdpPolicy& policy, std::size_t horizon, Rng& rng) const {
  check_state(start);
  Path p;
  p.states.push_back(start);
  StateId s = start;
  for (std::size_t i = 0; i < horizon; ++i) {
    const ActionId a = policy(s, rng);
    const Step step = sample_step(s, a, rng);
    p.actions.push_back(a);
    p.dwell.push_back(step.tau);
    p.states.push_back(step.next);
    s = step.next;
  }
  return p;
}

nlohmann::ordered_json Smdp::to_json() const {
  nlohmann::ordered_json doc;
  doc["states"] = state_names_;
  doc["actions"] = action_names_;
  doc["ap"] = ap_;
  nlohmann::ordered_json labels = nlohmann::ordered_json::object();
  for (StateId s = 0; s < num_states(); ++s)
    if (labels_[s]) labels[state_names_[s]] = label_names(s);
  doc["labels"] = labels;
  doc["initial"] = state_names_[initial_];
  auto trans = nlohmann::ordered_json::array();
  for (StateId s = 0; s < num_states(); ++s)
    for (ActionId a = 0; a < num_actions(); ++a)
      for (const auto& o : rows_[s * num_actions() + a])
        trans.push_back({{"from", state_names_[s]},
                         {"action", action_names_[a]},
                         {"to", state_names_[o.next]},
                         {"prob", o.prob},
                         {"dwell", o.dwell.to_json()}});
  doc["transitions"] = trans;
  return doc;
}

Smdp Smdp::from_json(const nlohmann::json& doc) {
  Smdp m(doc.at("states").get<std::vector<std::string>>(), doc.at("actions").get<std::vector<std::string>>(),
         doc.value("ap", std::vector<std::string>{}));
  if (doc.contains("labels")) {
    for (const auto& [state, props] : doc.at("labels").items()) {
      Letter l = 0;
      for (const auto& p : props) {
        auto it = std::find(m.ap_.begin(), m.ap_.end(), p.get<std::string>());
        if (it == m.ap_.end()) throw ConfigError("label '" + p.get<std::string>() + "' not in ap");
        l |= Letter{1} << (it - m.ap_.begin());
      }
      m.set_label(m.state_index(state), l);
    }
  }
  if (doc.contains("initial")) m.set_initial(m.state_index(doc.at("initial").get<std::string>()));
  for (const auto& t : doc.at("transitions"))
    m.add_transition(m.state_index(t.at("from").get<std::string>()), m.action_index(t.at("action").get<std::string>()),
                     m.state_index(t.at("to").get<std::string>()), t.at("prob").get<double>(),
                     DwellDistribution::from_json(t.at("dwell")));
  m.finalize();
  return m;
}

std::vector<Letter> labeled_trace(const Smdp& m, const Path& path) {
  std::vector<Letter> out;
  out.reserve(path.states.size());
  for (StateId s : path.states) out.push_back(m.label(s));
  return out;
}

}  // namespace smdpsynth
