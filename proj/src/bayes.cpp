#include "smdpsynth/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>

#include "smdpsynth/errors.hpp"

namespace smdpsynth {

ObservationStore::ObservationStore(std::size_t product_states, std::size_t num_actions, std::size_t base_states)
    : num_actions_(num_actions),
      base_states_(base_states),
      by_pair_(product_states * num_actions),
      pair_count_(product_states * num_actions, 0),
      pair_base_(product_states * num_actions, 0),
      stats_(base_states * num_actions) {}

void ObservationStore::account(StateId s, ActionId a, StateId s_next, double count, double tau_sum) {
  auto& st = stats_.at(s * num_actions_ + a);
  auto it = std::lower_bound(st.successors.begin(), st.successors.end(), s_next);
  const auto i = static_cast<std::size_t>(it - st.successors.begin());
  if (it == st.successors.end() || *it != s_next) {
    st.successors.insert(it, s_next);
    st.count.insert(st.count.begin() + static_cast<long>(i), 0.0);
    st.tau_sum.insert(st.tau_sum.begin() + static_cast<long>(i), 0.0);
  }
  st.count[i] += count;
  st.tau_sum[i] = std::max(0.0, st.tau_sum[i] + tau_sum);
  if (st.count[i] <= 0.5) {
    st.successors.erase(st.successors.begin() + static_cast<long>(i));
    st.count.erase(st.count.begin() + static_cast<long>(i));
    st.tau_sum.erase(st.tau_sum.begin() + static_cast<long>(i));
  }
}

void ObservationStore::append(const Observation& o) {
  if (!(o.tau >= 0.0)) throw Error("dwell time must be nonnegative");
  const std::size_t i = o.x * num_actions_ + o.a;
  auto& list = by_pair_.at(i);
  auto it = std::find_if(list.begin(), list.end(), [&](const Entry& e) { return e.x_next == o.x_next; });
  if (it == list.end()) {
    list.push_back({o.x_next, o.s_next, 1.0, o.tau});
  } else {
    it->count += 1.0;
    it->tau_sum += o.tau;
  }
  pair_base_[i] = o.s;
  ++pair_count_[i];
  account(o.s, o.a, o.s_next, 1.0, o.tau);
  ++size_;
}

void ObservationStore::remove_pair(StateId x, ActionId a) {
  const std::size_t i = x * num_actions_ + a;
  auto& list = by_pair_.at(i);
  if (list.empty()) return;
  for (const auto& e : list) account(pair_base_[i], a, e.s_next, -e.count, -e.tau_sum);
  size_ -= pair_count_[i];
  pair_count_[i] = 0;
  list.clear();
  list.shrink_to_fit();
}

double LomaxPredictive::mean() const {
  if (!(shape > 1.0)) throw MomentUndefined("predictive dwell mean needs posterior shape > 1");
  return scale / (shape - 1.0);
}

double LomaxPredictive::variance() const {
  if (!(shape > 2.0)) throw MomentUndefined("predictive dwell variance needs posterior shape > 2");
  return scale * scale * shape / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0));
}

double LomaxPredictive::survival(double t) const {
  if (t <= 0.0) return 1.0;
  return std::pow(1.0 + t / scale, -shape);
}

double LomaxPredictive::quantile(double alpha) const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("quantile level must lie in (0, 1]");
  return scale * (std::pow(alpha, -1.0 / shape) - 1.0);
}

RiskFunctional RiskFunctional::quantile(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("quantile risk level must lie in (0, 1]");
  return {Kind::Quantile, alpha};
}

RiskFunctional RiskFunctional::mean_plus_sigma(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mean-plus-sigma weight must lie in [0, 1]");
  return {Kind::MeanPlusSigma, lambda};
}

double risk_of(const DwellDistribution& d, const RiskFunctional& f) {
  if (f.kind == RiskFunctional::Kind::Quantile) return d.quantile(f.param);
  const double mu = d.mean();
  return f.param == 0.0 ? mu : mu + f.param * std::sqrt(d.variance());
}

double risk_of(const LomaxPredictive& d, const RiskFunctional& f) {
  if (f.kind == RiskFunctional::Kind::Quantile) return d.quantile(f.param);
  const double mu = d.mean();
  return f.param == 0.0 ? mu : mu + f.param * std::sqrt(d.variance());
}

double dirichlet_entropy(std::span<const double> alpha) {
  if (alpha.empty()) throw Error("Dirichlet needs at least one component");
  const double a0 = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  const auto k = static_cast<double>(alpha.size());
  double log_b = -std::lgamma(a0);
  double tail = 0.0;
  for (double a : alpha) {
    log_b += std::lgamma(a);
    tail += (a - 1.0) * boost::math::digamma(a);
  }
  return log_b + (a0 - k) * boost::math::digamma(a0) - tail;
}

double gamma_entropy(double shape, double rate) {
  return shape - std::log(rate) + std::lgamma(shape) + (1.0 - shape) * boost::math::digamma(shape);
}

PosteriorStore::PosteriorStore(std::size_t base_states, std::size_t num_actions, Priors priors)
    : base_states_(base_states), num_actions_(num_actions), priors_(priors), entries_(base_states * num_actions) {
  if (!(priors.dirichlet > 0.0 && priors.gamma_shape > 0.0 && priors.gamma_rate > 0.0))
    throw ConfigError("prior parameters must be positive");
}

PosteriorStore::Entry& PosteriorStore::entry(StateId s, ActionId a) {
  if (s >= base_states_ || a >= num_actions_) throw UntrackedPair("pair out of range");
  return entries_[s * num_actions_ + a];
}

const PosteriorStore::Entry& PosteriorStore::entry(StateId s, ActionId a) const {
  if (s >= base_states_ || a >= num_actions_) throw UntrackedPair("pair out of range");
  return entries_[s * num_actions_ + a];
}

long PosteriorStore::find(const Entry& e, StateId next) const {
  auto it = std::lower_bound(e.support.begin(), e.support.end(), next);
  if (it == e.support.end() || *it != next) return -1;
  return it - e.support.begin();
}

std::size_t PosteriorStore::slot(Entry& e, StateId next) {
  auto it = std::lower_bound(e.support.begin(), e.support.end(), next);
  const auto i = it - e.support.begin();
  if (it == e.support.end() || *it != next) {
    e.support.insert(it, next);
    e.concentration.insert(e.concentration.begin() + i, priors_.dirichlet);
    e.shape.insert(e.shape.begin() + i, priors_.gamma_shape);
    e.rate.insert(e.rate.begin() + i, priors_.gamma_rate);
    e.observed.insert(e.observed.begin() + i, false);
  }
  return static_cast<std::size_t>(i);
}

void PosteriorStore::declare_support(StateId s, ActionId a, std::span<const StateId> successors) {
  auto& e = entry(s, a);
  for (StateId y : successors) slot(e, y);
}

void PosteriorStore::observe(StateId s, ActionId a, StateId next, double tau) {
  if (!(tau >= 0.0)) throw Error("dwell time must be nonnegative");
  auto& e = entry(s, a);
  const std::size_t i = slot(e, next);
  e.concentration[i] += 1.0;
  e.shape[i] += 1.0;
  e.rate[i] += tau;
  e.observed[i] = true;
  e.total += 1.0;
}

PosteriorStore PosteriorStore::from_store(const ObservationStore& store, Priors priors) {
  PosteriorStore p(store.base_states(), store.num_actions(), priors);
  for (StateId s = 0; s < store.base_states(); ++s)
    for (ActionId a = 0; a < store.num_actions(); ++a) {
      const auto& st = store.stats(s, a);
      auto& e = p.entry(s, a);
      for (std::size_t i = 0; i < st.successors.size(); ++i) {
        const std::size_t j = p.slot(e, st.successors[i]);
        e.concentration[j] += st.count[i];
        e.shape[j] += st.count[i];
        e.rate[j] += st.tau_sum[i];
        e.observed[j] = true;
        e.total += st.count[i];
      }
    }
  return p;
}

PosteriorStore PosteriorStore::from_observations(std::span<const Observation> obs, std::size_t base_states,
                                                 std::size_t num_actions, const std::vector<bool>& pairs,
                                                 Priors priors) {
  PosteriorStore p(base_states, num_actions, priors);
  for (const auto& o : obs) {
    if (!pairs.empty() && !pairs.at(o.x * num_actions + o.a)) continue;
    p.observe(o.s, o.a, o.s_next, o.tau);
  }
  return p;
}

bool PosteriorStore::tracked(StateId s, ActionId a) const { return !entry(s, a).support.empty(); }

bool PosteriorStore::tracked(StateId s, ActionId a, StateId next) const { return find(entry(s, a), next) >= 0; }

std::span<const StateId> PosteriorStore::support(StateId s, ActionId a) const { return entry(s, a).support; }

std::span<const double> PosteriorStore::concentration(StateId s, ActionId a) const {
  return entry(s, a).concentration;
}

std::pair<double, double> PosteriorStore::gamma(StateId s, ActionId a, StateId next) const {
  const auto& e = entry(s, a);
  const long i = find(e, next);
  if (i < 0) throw UntrackedTriple("no posterior for this transition");
  return {e.shape[static_cast<std::size_t>(i)], e.rate[static_cast<std::size_t>(i)]};
}

double PosteriorStore::observations(StateId s, ActionId a) const { return entry(s, a).total; }

std::size_t PosteriorStore::observed_successors(StateId s, ActionId a) const {
  const auto& o = entry(s, a).observed;
  return static_cast<std::size_t>(std::count(o.begin(), o.end(), true));
}

std::vector<double> PosteriorStore::predictive_transition(StateId s, ActionId a) const {
  const auto& e = entry(s, a);
  if (e.support.empty()) throw UntrackedPair("no posterior for this state-action pair");
  const double total = std::accumulate(e.concentration.begin(), e.concentration.end(), 0.0);
  std::vector<double> out(e.concentration.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = e.concentration[i] / total;
  return out;
}

double PosteriorStore::predictive_transition(StateId s, ActionId a, StateId next) const {
  const auto& e = entry(s, a);
  if (e.support.empty()) throw UntrackedPair("no posterior for this state-action pair");
  const long i = find(e, next);
  if (i < 0) return 0.0;
  const double total = std::accumulate(e.concentration.begin(), e.concentration.end(), 0.0);
  return e.concentration[static_cast<std::size_t>(i)] / total;
}

LomaxPredictive PosteriorStore::predictive_dwell(StateId s, ActionId a, StateId next) const {
  const auto [shape, rate] = gamma(s, a, next);
  return {shape, rate};
}

double PosteriorStore::transition_entropy(StateId s, ActionId a) const {
  const auto& e = entry(s, a);
  if (e.support.empty()) throw UntrackedPair("no posterior for this state-action pair");
  return dirichlet_entropy(e.concentration);
}

double PosteriorStore::dwell_entropy(StateId s, ActionId a, StateId next) const {
  const auto [shape, rate] = gamma(s, a, next);
  return gamma_entropy(shape, rate);
}

nlohmann::ordered_json PosteriorStore::to_json() const {
  nlohmann::ordered_json doc;
  doc["base_states"] = base_states_;
  doc["actions"] = num_actions_;
  doc["priors"] = {{"dirichlet", priors_.dirichlet}, {"gamma_shape", priors_.gamma_shape}, {"gamma_rate", priors_.gamma_rate}};
  auto pairs = nlohmann::ordered_json::array();
  for (StateId s = 0; s < base_states_; ++s)
    for (ActionId a = 0; a < num_actions_; ++a) {
      const auto& e = entries_[s * num_actions_ + a];
      if (e.support.empty()) continue;
      auto gammas = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < e.support.size(); ++i) gammas.push_back({e.shape[i], e.rate[i]});
      pairs.push_back({{"s", s},
                       {"a", a},
                       {"support", e.support},
                       {"concentration", e.concentration},
                       {"gamma", gammas},
                       {"observed", e.observed},
                       {"total", e.total}});
    }
  doc["pairs"] = pairs;
  return doc;
}

PosteriorStore PosteriorStore::from_json(const nlohmann::json& doc) {
  const auto& pr = doc.at("priors");
  PosteriorStore p(doc.at("base_states").get<std::size_t>(), doc.at("actions").get<std::size_t>(),
                   Priors{pr.at("dirichlet").get<double>(), pr.at("gamma_shape").get<double>(),
                          pr.at("gamma_rate").get<double>()});
  for (const auto& j : doc.at("pairs")) {
    auto& e = p.entry(j.at("s").get<StateId>(), j.at("a").get<ActionId>());
    e.support = j.at("support").get<std::vector<StateId>>();
    e.concentration = j.at("concentration").get<std::vector<double>>();
    e.observed = j.at("observed").get<std::vector<bool>>();
    e.total = j.at("total").get<double>();
    for (const auto& g : j.at("gamma")) {
      e.shape.push_back(g.at(0).get<double>());
      e.rate.push_back(g.at(1).get<double>());
    }
    if (e.concentration.size() != e.support.size() || e.shape.size() != e.support.size())
      throw ConfigError("inconsistent posterior snapshot");
  }
  return p;
}

}  // namespace smdpsynth
