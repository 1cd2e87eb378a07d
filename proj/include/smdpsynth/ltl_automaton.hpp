#pragma once

#include <string>
#include <vector>

#include "smdpsynth/automaton.hpp"
#include "smdpsynth/ltl.hpp"

namespace smdpsynth {

struct TranslationOptions {
  /// Alphabet is 2^atomic_props. Empty means the formula's own atoms in order
  /// of appearance; otherwise it must contain every atom of the formula.
  std::vector<std::string> atomic_props;
  std::size_t state_budget = 1'000'000;
};

/// Tableau construction of a state-labelled Buchi automaton for `phi`
/// (generalized acceptance, then counter degeneralization). States that
/// cannot reach an accepting cycle are pruned.
OmegaAutomaton ltl_to_nba(const ltl::Formula& phi, const TranslationOptions& opts = {});

/// Universal co-Buchi automaton B with L_c(B) = L(phi): the Buchi automaton of
/// !phi read under co-Buchi acceptance, so a word satisfies phi iff no run
/// visits the accepting set infinitely often.
OmegaAutomaton ltl_to_cba(const ltl::Formula& phi, const TranslationOptions& opts = {});

}  // namespace smdpsynth
