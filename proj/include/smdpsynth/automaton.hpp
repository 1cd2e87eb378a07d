#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace smdpsynth {

using StateId = std::uint32_t;
/// A letter of the alphabet. When the automaton has atomic propositions,
/// bit i of the letter is set iff AP[i] holds (Sigma = 2^AP).
using Letter = std::uint32_t;

/// omega-automaton (X, Sigma, delta, x^I, Acc) with explicit successor lists.
/// The acceptance reading (co-Buchi, K-co-Buchi, Buchi) is chosen by the query,
/// not stored in the automaton.
class OmegaAutomaton {
 public:
  OmegaAutomaton() = default;
  OmegaAutomaton(std::size_t num_states, std::size_t num_letters, StateId initial = 0);
  /// Alphabet 2^AP.
  OmegaAutomaton(std::size_t num_states, std::vector<std::string> atomic_props, StateId initial = 0);

  std::size_t num_states() const noexcept { return accepting_.size(); }
  std::size_t num_letters() const noexcept { return num_letters_; }
  const std::vector<std::string>& atomic_props() const noexcept { return ap_; }
  StateId initial() const noexcept { return initial_; }

  StateId add_state(bool accepting = false);
  void set_initial(StateId x);
  void set_accepting(StateId x, bool accepting = true);
  /// Adds (from, letter, to); duplicates are ignored.
  void add_transition(StateId from, Letter letter, StateId to);

  bool is_accepting(StateId x) const { return accepting_.at(x); }
  std::vector<StateId> accepting_states() const;
  std::span<const StateId> successors(StateId x, Letter letter) const;
  std::size_t num_transitions() const noexcept;

  // Derived on demand, never cached.
  bool is_deterministic() const;
  bool is_complete() const;

  nlohmann::ordered_json to_json() const;
  static OmegaAutomaton from_json(const nlohmann::json& doc);

 private:
  void check_state(StateId x) const;
  void check_letter(Letter l) const;

  std::size_t num_letters_ = 1;
  std::vector<std::string> ap_;
  StateId initial_ = 0;
  std::vector<bool> accepting_;
  // succ_[x * num_letters_ + letter], each list sorted ascending.
  std::vector<std::vector<StateId>> succ_;
};

using Word = std::vector<Letter>;

/// Universal co-Buchi acceptance of stem.cycle^omega: every run visits each
/// accepting state finitely often. Decided on the finite run graph of the
/// automaton against the lasso positions (cycle positions folded).
/// Throws EmptyCycle.
bool lasso_accepted_cba(const OmegaAutomaton& a, std::span<const Letter> stem,
                        std::span<const Letter> cycle);

/// K-co-Buchi acceptance: every run makes at most K visits to accepting
/// states in total, the initial state included. Runs are counted on prefixes,
/// so a partial run that dies after K+1 visits also rejects; this matches the
/// counting determinization. Throws EmptyCycle.
bool lasso_accepted_kcba(const OmegaAutomaton& a, int bound, std::span<const Letter> stem,
                         std::span<const Letter> cycle);

/// True iff no transition leaves `subset`.
bool is_sink_set(const OmegaAutomaton& a, std::span<const StateId> subset);

}  // namespace smdpsynth
