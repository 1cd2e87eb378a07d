#include "smdpsynth/automaton.hpp"

#include <algorithm>
#include <deque>

#include "smdpsynth/errors.hpp"

namespace smdpsynth {

OmegaAutomaton::OmegaAutomaton(std::size_t num_states, std::size_t num_letters, StateId initial)
    : num_letters_(num_letters), initial_(initial), accepting_(num_states, false),
      succ_(num_states * num_letters) {
  if (num_letters == 0) throw Error("automaton alphabet must be nonempty");
  if (num_states > 0) check_state(initial);
}

OmegaAutomaton::OmegaAutomaton(std::size_t num_states, std::vector<std::string> atomic_props,
                               StateId initial)
    : OmegaAutomaton(num_states, std::size_t{1} << atomic_props.size(), initial) {
  if (atomic_props.size() > 16) throw CapacityExceeded("at most 16 atomic propositions supported");
  ap_ = std::move(atomic_props);
}

void OmegaAutomaton::check_state(StateId x) const {
  if (x >= num_states()) throw UnknownState("automaton state " + std::to_string(x) + " out of range");
}

void OmegaAutomaton::check_letter(Letter l) const {
  if (l >= num_letters_) throw AlphabetMismatch("letter " + std::to_string(l) + " not in alphabet");
}

StateId OmegaAutomaton::add_state(bool accepting) {
  accepting_.push_back(accepting);
  succ_.resize(accepting_.size() * num_letters_);
  return static_cast<StateId>(accepting_.size() - 1);
}

void OmegaAutomaton::set_initial(StateId x) {
  check_state(x);
  initial_ = x;
}

void OmegaAutomaton::set_accepting(StateId x, bool accepting) {
  check_state(x);
  accepting_[x] = accepting;
}

void OmegaAutomaton::add_transition(StateId from, Letter letter, StateId to) {
  check_state(from);
  check_state(to);
  check_letter(letter);
  auto& list = succ_[from * num_letters_ + letter];
  auto it = std::lower_bound(list.begin(), list.end(), to);
  if (it == list.end() || *it != to) list.insert(it, to);
}

std::vector<StateId> OmegaAutomaton::accepting_states() const {
  std::vector<StateId> out;
  for (StateId x = 0; x < num_states(); ++x)
    if (accepting_[x]) out.push_back(x);
  return out;
}

std::span<const StateId> OmegaAutomaton::successors(StateId x, Letter letter) const {
  check_state(x);
  check_letter(letter);
  return succ_[x * num_letters_ + letter];
}

std::size_t OmegaAutomaton::num_transitions() const noexcept {
  std::size_t n = 0;
  for (const auto& l : succ_) n += l.size();
  return n;
}

bool OmegaAutomaton::is_deterministic() const {
  return std::all_of(succ_.begin(), succ_.end(), [](const auto& l) { return l.size() <= 1; });
}

bool OmegaAutomaton::is_complete() const {
  return std::all_of(succ_.begin(), succ_.end(), [](const auto& l) { return !l.empty(); });
}

nlohmann::ordered_json OmegaAutomaton::to_json() const {
  nlohmann::ordered_json doc;
  doc["states"] = num_states();
  doc["ap"] = ap_;
  auto alphabet = nlohmann::ordered_json::array();
  for (Letter l = 0; l < num_letters_; ++l) {
    if (ap_.empty()) {
      alphabet.push_back(l);
      continue;
    }
    auto names = nlohmann::ordered_json::array();
    std::vector<std::string> sorted;
    for (std::size_t i = 0; i < ap_.size(); ++i)
      if (l & (Letter{1} << i)) sorted.push_back(ap_[i]);
    std::sort(sorted.begin(), sorted.end());
    for (auto& n : sorted) names.push_back(n);
    alphabet.push_back(names);
  }
  doc["alphabet"] = alphabet;
  auto trans = nlohmann::ordered_json::array();
  for (StateId x = 0; x < num_states(); ++x)
    for (Letter l = 0; l < num_letters_; ++l)
      for (StateId y : succ_[x * num_letters_ + l]) trans.push_back({x, l, y});
  doc["transitions"] = trans;
  doc["initial"] = initial_;
  doc["accepting"] = accepting_states();
  return doc;
}

OmegaAutomaton OmegaAutomaton::from_json(const nlohmann::json& doc) {
  const auto n = doc.at("states").get<std::size_t>();
  auto ap = doc.value("ap", std::vector<std::string>{});
  OmegaAutomaton a = ap.empty() ? OmegaAutomaton(n, doc.at("alphabet").size())
                                : OmegaAutomaton(n, std::move(ap));
  for (const auto& t : doc.at("transitions"))
    a.add_transition(t.at(0).get<StateId>(), t.at(1).get<Letter>(), t.at(2).get<StateId>());
  a.set_initial(doc.at("initial").get<StateId>());
  for (const auto& x : doc.at("accepting")) a.set_accepting(x.get<StateId>());
  return a;
}

namespace {

struct LassoShape {
  std::size_t stem;
  std::size_t length;
  std::size_t next(std::size_t pos) const { return pos + 1 < length ? pos + 1 : stem; }
};

Letter letter_at(std::span<const Letter> stem, std::span<const Letter> cycle, std::size_t pos) {
  return pos < stem.size() ? stem[pos] : cycle[pos - stem.size()];
}

// Tarjan SCC over the lasso run graph restricted to nodes reachable from the
// initial node. Returns true if some accepting node lies on a cycle.
class RunGraphCycleFinder {
  struct Frame {
    std::size_t v;
    std::span<const StateId> succ;
    std::size_t next_child;
    std::size_t succ_pos;
  };

 public:
  RunGraphCycleFinder(const OmegaAutomaton& a, std::span<const Letter> stem, std::span<const Letter> cycle)
      : a_(a), stem_(stem), cycle_(cycle), shape_{stem.size(), stem.size() + cycle.size()},
        s_(scratch()) {
    const std::size_t n = a.num_states() * shape_.length;
    s_.index.assign(n, -1);
    s_.low.assign(n, 0);
    s_.on_stack.assign(n, false);
    s_.stack.clear();
    s_.scc.clear();
  }

  bool accepting_cycle_reachable() {
    if (a_.num_states() == 0) return false;
    return strongconnect(node(a_.initial(), 0));
  }

 private:
  std::size_t node(StateId x, std::size_t pos) const { return x * shape_.length + pos; }

  // Iterative Tarjan; returns true as soon as an accepting nontrivial SCC is found.
  bool strongconnect(std::size_t root) {
    auto& call = s_.call;
    call.clear();
    auto push = [&](std::size_t v) {
      s_.index[v] = s_.low[v] = counter_++;
      s_.stack.push_back(v);
      s_.on_stack[v] = true;
      const StateId x = static_cast<StateId>(v / shape_.length);
      const std::size_t pos = v % shape_.length;
      call.push_back({v, a_.successors(x, letter_at(stem_, cycle_, pos)), 0, shape_.next(pos)});
    };
    push(root);
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.next_child < f.succ.size()) {
        const std::size_t w = node(f.succ[f.next_child++], f.succ_pos);
        if (s_.index[w] < 0) {
          push(w);
        } else if (s_.on_stack[w]) {
          s_.low[f.v] = std::min(s_.low[f.v], s_.index[w]);
        }
        continue;
      }
      const std::size_t v = f.v;
      call.pop_back();
      if (!call.empty()) s_.low[call.back().v] = std::min(s_.low[call.back().v], s_.low[v]);
      if (s_.low[v] != s_.index[v]) continue;
      auto& scc = s_.scc;
      scc.clear();
      std::size_t w;
      do {
        w = s_.stack.back();
        s_.stack.pop_back();
        s_.on_stack[w] = false;
        scc.push_back(w);
      } while (w != v);
      if (has_accepting_cycle(scc)) return true;
    }
    return false;
  }

  bool has_accepting_cycle(const std::vector<std::size_t>& scc) const {
    bool accepting = false;
    for (std::size_t v : scc) accepting |= a_.is_accepting(static_cast<StateId>(v / shape_.length));
    if (!accepting) return false;
    if (scc.size() > 1) return true;
    const std::size_t v = scc.front();
    const StateId x = static_cast<StateId>(v / shape_.length);
    const std::size_t pos = v % shape_.length;
    if (shape_.next(pos) != pos) return false;
    for (StateId y : a_.successors(x, letter_at(stem_, cycle_, pos)))
      if (y == x) return true;
    return false;
  }

  struct Scratch {
    std::vector<long> index, low;
    std::vector<bool> on_stack;
    std::vector<std::size_t> stack, scc;
    std::vector<Frame> call;
  };
  // Reused across calls; lasso checks run in tight loops.
  static Scratch& scratch() {
    thread_local Scratch s;
    return s;
  }

  const OmegaAutomaton& a_;
  std::span<const Letter> stem_, cycle_;
  LassoShape shape_;
  Scratch& s_;
  long counter_ = 0;
};

void check_word(const OmegaAutomaton& a, std::span<const Letter> stem, std::span<const Letter> cycle) {
  if (cycle.empty()) throw EmptyCycle("lasso cycle must be nonempty");
  for (auto part : {stem, cycle})
    for (Letter l : part)
      if (l >= a.num_letters()) throw AlphabetMismatch("letter " + std::to_string(l) + " not in alphabet");
}

}  // namespace

bool lasso_accepted_cba(const OmegaAutomaton& a, std::span<const Letter> stem,
                        std::span<const Letter> cycle) {
  check_word(a, stem, cycle);
  return !RunGraphCycleFinder(a, stem, cycle).accepting_cycle_reachable();
}

bool lasso_accepted_kcba(const OmegaAutomaton& a, int bound, std::span<const Letter> stem,
                         std::span<const Letter> cycle) {
  check_word(a, stem, cycle);
  if (bound < 0) throw Error("visit bound must be nonnegative");
  if (a.num_states() == 0) return true;
  const LassoShape shape{stem.size(), stem.size() + cycle.size()};
  const std::size_t levels = static_cast<std::size_t>(bound) + 2;  // counts 0..K+1
  auto id = [&](StateId x, std::size_t pos, std::size_t count) {
    return (x * shape.length + pos) * levels + count;
  };
  std::vector<bool> seen(a.num_states() * shape.length * levels, false);
  std::deque<std::size_t> frontier;
  const std::size_t c0 = a.is_accepting(a.initial()) ? 1 : 0;
  if (c0 > static_cast<std::size_t>(bound)) return false;
  seen[id(a.initial(), 0, c0)] = true;
  frontier.push_back(id(a.initial(), 0, c0));
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop_front();
    const std::size_t count = v % levels;
    const std::size_t pos = (v / levels) % shape.length;
    const auto x = static_cast<StateId>(v / levels / shape.length);
    for (StateId y : a.successors(x, letter_at(stem, cycle, pos))) {
      const std::size_t c = count + (a.is_accepting(y) ? 1 : 0);
      if (c > static_cast<std::size_t>(bound)) return false;
      const std::size_t w = id(y, shape.next(pos), c);
      if (!seen[w]) {
        seen[w] = true;
        frontier.push_back(w);
      }
    }
  }
  return true;
}

bool is_sink_set(const OmegaAutomaton& a, std::span<const StateId> subset) {
  std::vector<bool> in(a.num_states(), false);
  for (StateId x : subset) {
    if (x >= a.num_states()) throw UnknownState("state " + std::to_string(x) + " out of range");
    in[x] = true;
  }
  for (StateId x : subset)
    for (Letter l = 0; l < a.num_letters(); ++l)
      for (StateId y : a.successors(x, l))
        if (!in[y]) return false;
  return true;
}

}  // namespace smdpsynth
