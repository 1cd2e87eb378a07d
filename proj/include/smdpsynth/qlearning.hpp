#pragma once

#include <cstdint>
#include <vector>

#include "smdpsynth/policy.hpp"
#include "smdpsynth/product.hpp"

namespace smdpsynth {

/// State-dependent reward and discount: R = (1 - gamma_acc) r_n and
/// Gamma = gamma_acc on accepting states, R = 0 and Gamma = gamma elsewhere.
struct RewardDiscount {
  double gamma = 0.9999;
  double gamma_acc = 0.9;
  double r_n = -1.0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  double reward(const ProductSmdp& p, StateId x) const;
  double discount(const ProductSmdp& p, StateId x) const;
};

struct TransientConfig {
  RewardDiscount rd;
  std::size_t episodes = 20000;
  std::size_t step_cap = 4000;
  double rate_constant = 2.0;   ///< alpha_i = c / (c + visits)
  double epsilon = 0.5;         ///< epsilon-greedy behaviour
  std::uint64_t seed = 0;

  void validate() const;
};

/// Q over the states outside W (indexed x * |A| + a; NaN elsewhere and on
/// disabled pairs) with per-pair visit counts.
struct TransientQ {
  std::vector<double> q;
  std::vector<std::size_t> visits;
  std::vector<bool> transient;
  std::size_t num_actions = 0;
  std::size_t updates = 0;
  /// Largest |change| of a Q entry over the last 10% of the episodes.
  double tail_change = 0.0;

  double value(StateId x, ActionId a) const { return q.at(x * num_actions + a); }
};

/// Q-learning on the states outside `winning` with target
/// R(x') + Gamma(x') max Q(x', .). Entering W ends an episode with value 0;
/// entering an accepting state ends it with the closed-form sink value r_n.
/// Episodes start round-robin over the non-accepting transient states.
TransientQ qlearn_transient(const ProductSmdp& p, const std::vector<bool>& winning, const TransientConfig& cfg);

/// Greedy action per transient state, lowest action id on ties; kNoAction on W.
PositionalPolicy extract_pi_tr(const ProductSmdp& p, const TransientQ& q);

/// max_a Q(x, a) per transient state, NaN on W.
std::vector<double> greedy_values(const ProductSmdp& p, const TransientQ& q);

}  // namespace smdpsynth
