#include "smdpsynth/dkcba.hpp"

#include <algorithm>
#include <deque>
#include <string>
#include <unordered_map>

#include "smdpsynth/errors.hpp"

namespace smdpsynth {

namespace {

std::string key_of(const CountingFunction& f) { return std::string(f.begin(), f.end()); }

}  // namespace

Dkcba determinize_kcba(const OmegaAutomaton& b, int bound, const DeterminizeOptions& opts) {
  if (bound < 0) throw Error("visit bound must be nonnegative");
  if (bound > 125) throw CapacityExceeded("visit bound above 125 not supported");
  if (b.num_states() == 0) throw Error("cannot determinize an automaton without states");

  const auto limit = static_cast<std::int8_t>(bound + 1);
  const std::size_t n = b.num_states();

  Dkcba d;
  d.bound = bound;
  d.automaton = b.atomic_props().empty() ? OmegaAutomaton(0, b.num_letters())
                                         : OmegaAutomaton(0, b.atomic_props());

  std::unordered_map<std::string, StateId> ids;
  std::deque<StateId> frontier;

  // An accepting state that loops on every letter overflows any bound once
  // occupied, so such functions are sent to the sink directly.
  std::vector<bool> doomed(n, false);
  if (opts.collapse_doomed)
    for (StateId x = 0; x < n; ++x) {
      bool loops = b.is_accepting(x);
      for (Letter l = 0; loops && l < b.num_letters(); ++l) {
        const auto succ = b.successors(x, l);
        loops = std::binary_search(succ.begin(), succ.end(), x);
      }
      doomed[x] = loops;
    }
  auto is_over = [&](const CountingFunction& f) {
    for (std::size_t x = 0; x < n; ++x)
      if (f[x] > bound || (doomed[x] && f[x] >= 0)) return true;
    return false;
  };
  auto intern = [&](CountingFunction f) -> StateId {
    if (is_over(f)) {
      if (!d.sink) {
        d.sink = d.automaton.add_state(true);
        d.counters.emplace_back();
      }
      return *d.sink;
    }
    auto key = key_of(f);
    if (auto it = ids.find(key); it != ids.end()) return it->second;
    if (d.automaton.num_states() >= opts.state_budget)
      throw CapacityExceeded("determinization exceeded " + std::to_string(opts.state_budget) + " states");
    const StateId q = d.automaton.add_state(false);
    ids.emplace(std::move(key), q);
    d.counters.push_back(std::move(f));
    frontier.push_back(q);
    return q;
  };

  CountingFunction init(n, -1);
  init[b.initial()] = b.is_accepting(b.initial()) ? 1 : 0;
  d.automaton.set_initial(intern(std::move(init)));

  CountingFunction next(n);
  while (!frontier.empty()) {
    const StateId q = frontier.front();
    frontier.pop_front();
    for (Letter l = 0; l < b.num_letters(); ++l) {
      std::fill(next.begin(), next.end(), std::int8_t{-1});
      const CountingFunction& cur = d.counters[q];
      for (StateId x = 0; x < n; ++x) {
        if (cur[x] < 0) continue;
        for (StateId y : b.successors(x, l)) {
          const auto c = static_cast<std::int8_t>(std::min<int>(limit, cur[x] + (b.is_accepting(y) ? 1 : 0)));
          next[y] = std::max(next[y], c);
        }
      }
      const StateId r = intern(next);
      d.automaton.add_transition(q, l, r);
    }
  }
  if (d.sink)
    for (Letter l = 0; l < b.num_letters(); ++l) d.automaton.add_transition(*d.sink, l, *d.sink);
  return d;
}

}  // namespace smdpsynth
