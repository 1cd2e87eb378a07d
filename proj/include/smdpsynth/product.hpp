#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "smdpsynth/dkcba.hpp"
#include "smdpsynth/smdp.hpp"

namespace smdpsynth {

struct ProductOutcome {
  StateId next;       ///< product state
  double prob;
  StateId base_next;  ///< SMDP component of `next`
};

/// Reachable part of the product of an SMDP and a dKcBA. A move
/// (s, q) -a-> (s', q') has probability T(s'|s,a) when q' = Delta(q, L(s')).
/// The initial state is (s^I, Delta(F^I, L(s^I))). Accepting states are those
/// whose automaton component is the sink.
class ProductSmdp {
 public:
  struct State {
    StateId s;
    StateId q;
  };

  const Smdp& base() const noexcept { return base_; }
  const Dkcba& automaton() const noexcept { return dkcba_; }

  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_actions() const noexcept { return base_.num_actions(); }
  StateId initial() const noexcept { return 0; }
  const State& state(StateId x) const { return states_.at(x); }
  std::optional<StateId> find(StateId s, StateId q) const;
  bool is_accepting(StateId x) const { return dkcba_.is_sink(state(x).q); }
  /// Product state entered from x when the SMDP moves to `s_next`. Uses only
  /// the automaton and the labels; nullopt if that state was never reached.
  std::optional<StateId> successor(StateId x, StateId s_next) const;
  std::vector<StateId> accepting_states() const;

  std::span<const ActionId> enabled_actions(StateId x) const { return base_.enabled_actions(state(x).s); }
  std::span<const ProductOutcome> outcomes(StateId x, ActionId a) const;
  const DwellDistribution& dwell(StateId x, ActionId a, StateId next) const;
  Step sample_step(StateId x, ActionId a, Rng& rng) const;

  /// State id = index; each entry records the SMDP state name and dKcBA state.
  nlohmann::ordered_json to_json() const;

 private:
  friend ProductSmdp build_product(const Smdp&, const Dkcba&, std::size_t);
  ProductSmdp(Smdp base, Dkcba d) : base_(std::move(base)), dkcba_(std::move(d)) {}

  Smdp base_;
  Dkcba dkcba_;
  std::vector<State> states_;
  std::vector<StateId> index_;  // s * |Q| + q -> product id, or -1
  std::vector<Letter> letter_;  // automaton letter of each SMDP state
  std::vector<std::vector<ProductOutcome>> rows_;
};

/// BFS from the initial product state; ids are assigned in discovery order.
/// Every automaton proposition must be an SMDP proposition (matched by name);
/// extra SMDP propositions are ignored. Throws AlphabetMismatch otherwise and
/// CapacityExceeded past `state_budget` product states.
ProductSmdp build_product(const Smdp& m, const Dkcba& d, std::size_t state_budget = 5'000'000);

/// Per-product-state membership flags plus pair flags indexed x * |A| + a.
struct WinningRegion {
  std::vector<bool> states;
  std::vector<bool> pairs;
  std::size_t num_actions = 0;

  bool contains(StateId x) const { return states.at(x); }
  bool contains(StateId x, ActionId a) const { return pairs.at(x * num_actions + a); }
  std::size_t num_states() const;
  std::size_t num_pairs() const;
  std::vector<StateId> state_list() const;
};

/// Greatest fixpoint of "some action keeps the whole support inside", started
/// from the non-accepting states: the states that can avoid the accepting set
/// with probability one, and their safe actions.
WinningRegion exact_winning_region(const ProductSmdp& p);

/// max over policies of Pr(reach target), by value iteration to a sup-norm
/// residual below `tol` (states that cannot reach the target are fixed at 0).
std::vector<double> exact_max_reach_probability(const ProductSmdp& p, const std::vector<bool>& target,
                                                double tol = 1e-12);

/// Pr(reach target) under a positional policy, by a sparse direct solve.
/// `policy[x]` is ignored on target states.
std::vector<double> policy_reach_probability(const ProductSmdp& p, const std::vector<ActionId>& policy,
                                             const std::vector<bool>& target);

/// W as id lists for export.
nlohmann::ordered_json winning_region_to_json(const WinningRegion& w);

}  // namespace smdpsynth
