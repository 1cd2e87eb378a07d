#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "smdpsynth/automaton.hpp"

namespace smdpsynth {

/// Counting function X -> {-1, ..., K+1}; -1 marks states no run occupies.
using CountingFunction = std::vector<std::int8_t>;

/// Determinized K-co-Buchi automaton. States are reachable counting functions
/// in BFS discovery order; every function with an entry above K is collapsed
/// into a single absorbing sink, which is the whole accepting set.
struct Dkcba {
  int bound = 0;
  OmegaAutomaton automaton;
  /// counters[q] for non-sink states; the sink's entry is empty.
  std::vector<CountingFunction> counters;
  std::optional<StateId> sink;

  std::size_t num_states() const noexcept { return automaton.num_states(); }
  StateId initial() const noexcept { return automaton.initial(); }
  StateId successor(StateId q, Letter letter) const { return automaton.successors(q, letter).front(); }
  bool is_sink(StateId q) const noexcept { return sink && *sink == q; }
};

struct DeterminizeOptions {
  std::size_t state_budget = 1'000'000;
  /// Send counting functions that occupy an accepting state with a self-loop
  /// on every letter straight to the sink. The accepted language is unchanged.
  bool collapse_doomed = true;
};

/// Subset construction with per-state visit counters. Throws CapacityExceeded
/// once more than `state_budget` states are discovered.
Dkcba determinize_kcba(const OmegaAutomaton& b, int bound, const DeterminizeOptions& opts = {});

}  // namespace smdpsynth
