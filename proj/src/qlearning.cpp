#include "smdpsynth/qlearning.hpp"

#include <cmath>
#include <limits>

#include "smdpsynth/errors.hpp"

namespace smdpsynth {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ActionId greedy(const ProductSmdp& p, const TransientQ& t, StateId x) {
  ActionId best = kNoAction;
  double best_q = -std::numeric_limits<double>::infinity();
  for (ActionId a : p.enabled_actions(x)) {
    const double v = t.q[x * t.num_actions + a];
    if (v > best_q) {
      best_q = v;
      best = a;
    }
  }
  return best;
}

}  // namespace

void RewardDiscount::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(gamma_acc > 0.0 && gamma_acc < 1.0)) throw ConfigError("gamma_acc must lie in (0, 1)");
  if (!(r_n < 0.0) || !std::isfinite(r_n)) throw ConfigError("r_n must be negative");
}

double RewardDiscount::reward(const ProductSmdp& p, StateId x) const {
  return p.is_accepting(x) ? (1.0 - gamma_acc) * r_n : 0.0;
}

double RewardDiscount::discount(const ProductSmdp& p, StateId x) const { return p.is_accepting(x) ? gamma_acc : gamma; }

void TransientConfig::validate() const {
  rd.validate();
  if (step_cap < 1) throw ConfigError("step cap must be at least 1");
  if (!(rate_constant > 0.0)) throw ConfigError("rate constant must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
}

TransientQ qlearn_transient(const ProductSmdp& p, const std::vector<bool>& winning, const TransientConfig& cfg) {
  cfg.validate();
  const std::size_t n = p.num_states();
  const std::size_t na = p.num_actions();
  TransientQ t;
  t.num_actions = na;
  t.q.assign(n * na, kNaN);
  t.visits.assign(n * na, 0);
  t.transient.assign(n, false);
  std::vector<StateId> starts;
  for (StateId x = 0; x < n; ++x) {
    if (winning.at(x)) continue;
    t.transient[x] = true;
    for (ActionId a : p.enabled_actions(x)) t.q[x * na + a] = p.is_accepting(x) ? cfg.rd.r_n : 0.0;
    if (!p.is_accepting(x)) starts.push_back(x);
  }
  if (starts.empty()) return t;

  // Sink value of an accepting state: the geometric series of its reward.
  const double sink = cfg.rd.r_n;
  Rng rng = make_stream(cfg.seed, 1);
  const std::size_t snapshot_at = cfg.episodes - cfg.episodes / 10;
  std::vector<double> snapshot = t.q;
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    if (ep == snapshot_at) snapshot = t.q;
    StateId x = starts[ep % starts.size()];
    for (std::size_t step = 0; step < cfg.step_cap; ++step) {
      const auto actions = p.enabled_actions(x);
      const ActionId a = uniform01(rng) < cfg.epsilon
                             ? actions[std::uniform_int_distribution<std::size_t>(0, actions.size() - 1)(rng)]
                             : greedy(p, t, x);
      const StateId y = p.sample_step(x, a, rng).next;
      bool done = true;
      double target;
      if (winning[y]) {
        target = 0.0;
      } else if (p.is_accepting(y)) {
        target = cfg.rd.reward(p, y) + cfg.rd.discount(p, y) * sink;
      } else {
        target = cfg.rd.reward(p, y) + cfg.rd.discount(p, y) * t.q[y * na + greedy(p, t, y)];
        done = false;
      }
      const std::size_t i = x * na + a;
      const double rate = cfg.rate_constant / (cfg.rate_constant + static_cast<double>(++t.visits[i]));
      t.q[i] += rate * (target - t.q[i]);
      ++t.updates;
      if (done) break;
      x = y;
    }
  }
  for (std::size_t i = 0; i < t.q.size(); ++i)
    if (!std::isnan(t.q[i])) t.tail_change = std::max(t.tail_change, std::abs(t.q[i] - snapshot[i]));
  return t;
}

PositionalPolicy extract_pi_tr(const ProductSmdp& p, const TransientQ& q) {
  PositionalPolicy pi(p.num_states(), kNoAction);
  for (StateId x = 0; x < p.num_states(); ++x)
    if (q.transient[x]) pi[x] = greedy(p, q, x);
  return pi;
}

std::vector<double> greedy_values(const ProductSmdp& p, const TransientQ& q) {
  std::vector<double> v(p.num_states(), kNaN);
  for (StateId x = 0; x < p.num_states(); ++x)
    if (q.transient[x]) v[x] = q.value(x, greedy(p, q, x));
  return v;
}

}  // namespace smdpsynth
