#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smdpsynth/automaton.hpp"
#include "smdpsynth/rng.hpp"

namespace smdpsynth {

using ActionId = std::uint32_t;

/// Dwell-time law of a transition. Exponential(rate) or the empirical law of
/// a nonnegative sample list.
class DwellDistribution {
 public:
  enum class Kind { Exponential, Empirical };

  static DwellDistribution exponential(double rate);
  static DwellDistribution empirical(std::vector<double> samples);

  Kind kind() const noexcept { return kind_; }
  double rate() const;  ///< Exponential only.
  const std::vector<double>& samples() const noexcept { return samples_; }

  double sample(Rng& rng) const;
  double mean() const;
  double variance() const;
  /// P(tau > t).
  double survival(double t) const;
  /// inf { t | P(tau > t) < alpha }, alpha in (0, 1].
  double quantile(double alpha) const;

  nlohmann::json to_json() const;
  static DwellDistribution from_json(const nlohmann::json& doc);

 private:
  DwellDistribution() = default;
  Kind kind_ = Kind::Exponential;
  double rate_ = 1.0;
  std::vector<double> samples_;  // sorted ascending for Empirical
};

struct Outcome {
  StateId next;
  double prob;
  DwellDistribution dwell;
};

struct Step {
  StateId next;
  double tau;
};

/// Time-abstract path s_0 a_0 s_1 ... with recorded dwell times tau_i on each step.
struct Path {
  std::vector<StateId> states;
  std::vector<ActionId> actions;
  std::vector<double> dwell;
  std::size_t length() const noexcept { return actions.size(); }
};

/// Stochastic policy over SMDP states: returns the action to take.
using SmdpPolicy = std::function<ActionId(StateId, Rng&)>;

/// Finite SMDP (S, A, T, D, s^I, AP, L). Built with add_transition/set_label,
/// then frozen by finalize(), which validates stochasticity and computes A(s).
class Smdp {
 public:
  Smdp(std::vector<std::string> state_names, std::vector<std::string> action_names,
       std::vector<std::string> atomic_props);

  std::size_t num_states() const noexcept { return state_names_.size(); }
  std::size_t num_actions() const noexcept { return action_names_.size(); }
  const std::string& state_name(StateId s) const;
  const std::string& action_name(ActionId a) const;
  StateId state_index(const std::string& name) const;
  ActionId action_index(const std::string& name) const;
  const std::vector<std::string>& atomic_props() const noexcept { return ap_; }
  StateId initial() const noexcept { return initial_; }
  /// L(s) as a bitset over atomic_props().
  Letter label(StateId s) const;
  std::vector<std::string> label_names(StateId s) const;

  void set_initial(StateId s);
  void set_label(StateId s, Letter label);
  /// Adds probability mass to T(s'|s,a); repeated calls for the same triple
  /// accumulate mass and replace the dwell law.
  void add_transition(StateId s, ActionId a, StateId next, double prob, DwellDistribution dwell);
  /// Throws ConfigError if a row does not sum to 1 within 1e-9 or a state has
  /// no enabled action.
  void finalize();
  bool finalized() const noexcept { return finalized_; }

  std::span<const ActionId> enabled_actions(StateId s) const;
  bool is_enabled(StateId s, ActionId a) const;
  /// Sparse row T(.|s,a), successors in ascending order. Empty when disabled.
  std::span<const Outcome> outcomes(StateId s, ActionId a) const;
  double prob(StateId s, ActionId a, StateId next) const;
  const DwellDistribution& dwell(StateId s, ActionId a, StateId next) const;

  Step sample_step(StateId s, ActionId a, Rng& rng) const;
  Path simulate(const SmdpPolicy& policy, std::size_t horizon, Rng& rng) const;
  Path simulate_from(StateId start, const SmdpPolicy& policy, std::size_t horizon, Rng& rng) const;

  nlohmann::ordered_json to_json() const;
  /// Generic table format: states, actions, ap, labels, initial, transitions.
  static Smdp from_json(const nlohmann::json& doc);

 private:
  void check_state(StateId s) const;
  void check_action(ActionId a) const;
  void require_finalized() const;

  std::vector<std::string> state_names_;
  std::vector<std::string> action_names_;
  std::vector<std::string> ap_;
  std::vector<Letter> labels_;
  StateId initial_ = 0;
  std::vector<std::vector<Outcome>> rows_;  // rows_[s * |A| + a]
  std::vector<std::vector<ActionId>> enabled_;
  bool finalized_ = false;
};

/// Time-abstract labeled trace L(s_0) L(s_1) ...
std::vector<Letter> labeled_trace(const Smdp& m, const Path& path);

}  // namespace smdpsynth
