#include "smdpsynth/product.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "smdpsynth/errors.hpp"

namespace smdpsynth {

namespace {

constexpr StateId kNone = static_cast<StateId>(-1);

// Bit i of the result is set iff automaton proposition i holds in `label`.
std::vector<Letter> letter_per_state(const Smdp& m, const OmegaAutomaton& a) {
  std::vector<int> bit_of(a.atomic_props().size(), -1);
  for (std::size_t i = 0; i < a.atomic_props().size(); ++i) {
    const auto& name = a.atomic_props()[i];
    auto it = std::find(m.atomic_props().begin(), m.atomic_props().end(), name);
    if (it == m.atomic_props().end()) throw AlphabetMismatch("automaton proposition '" + name + "' unknown to the SMDP");
    bit_of[i] = static_cast<int>(it - m.atomic_props().begin());
  }
  if (a.atomic_props().empty() && a.num_letters() != (std::size_t{1} << m.atomic_props().size()))
    throw AlphabetMismatch("automaton alphabet size does not match 2^AP of the SMDP");
  std::vector<Letter> out(m.num_states(), 0);
  for (StateId s = 0; s < m.num_states(); ++s) {
    if (a.atomic_props().empty()) {
      out[s] = m.label(s);
      continue;
    }
    for (std::size_t i = 0; i < bit_of.size(); ++i)
      if (m.label(s) & (Letter{1} << bit_of[i])) out[s] |= Letter{1} << i;
  }
  return out;
}

// States from which `target` is reachable in the graph of all enabled actions
// (or only of `policy` when given).
std::vector<bool> can_reach(const ProductSmdp& p, const std::vector<bool>& target,
                            const std::vector<ActionId>* policy) {
  const std::size_t n = p.num_states();
  std::vector<std::vector<StateId>> pred(n);
  for (StateId x = 0; x < n; ++x) {
    auto add = [&](ActionId a) {
      for (const auto& o : p.outcomes(x, a)) pred[o.next].push_back(x);
    };
    if (policy) {
      if (!target[x]) add((*policy)[x]);
    } else {
      for (ActionId a : p.enabled_actions(x)) add(a);
    }
  }
  std::vector<bool> seen(target);
  std::deque<StateId> queue;
  for (StateId x = 0; x < n; ++x)
    if (target[x]) queue.push_back(x);
  while (!queue.empty()) {
    const StateId y = queue.front();
    queue.pop_front();
    for (StateId x : pred[y])
      if (!seen[x]) {
        seen[x] = true;
        queue.push_back(x);
      }
  }
  return seen;
}

}  // namespace

std::optional<StateId> ProductSmdp::find(StateId s, StateId q) const {
  if (s >= base_.num_states() || q >= dkcba_.num_states()) return std::nullopt;
  const StateId id = index_[s * dkcba_.num_states() + q];
  if (id == kNone) return std::nullopt;
  return id;
}

std::optional<StateId> ProductSmdp::successor(StateId x, StateId s_next) const {
  if (s_next >= base_.num_states()) return std::nullopt;
  return find(s_next, dkcba_.successor(state(x).q, letter_[s_next]));
}

std::vector<StateId> ProductSmdp::accepting_states() const {
  std::vector<StateId> out;
  for (StateId x = 0; x < num_states(); ++x)
    if (is_accepting(x)) out.push_back(x);
  return out;
}

std::span<const ProductOutcome> ProductSmdp::outcomes(StateId x, ActionId a) const {
  if (x >= num_states()) throw UnknownState("product state " + std::to_string(x) + " out of range");
  if (a >= num_actions()) throw ConfigError("action " + std::to_string(a) + " out of range");
  return rows_[x * num_actions() + a];
}

const DwellDistribution& ProductSmdp::dwell(StateId x, ActionId a, StateId next) const {
  return base_.dwell(state(x).s, a, state(next).s);
}

Step ProductSmdp::sample_step(StateId x, ActionId a, Rng& rng) const {
  const auto row = outcomes(x, a);
  if (row.empty())
    throw ActionNotEnabled("action " + base_.action_name(a) + " not enabled in " + base_.state_name(state(x).s));
  double u = uniform01(rng);
  const ProductOutcome* pick = &row.back();
  for (const auto& o : row) {
    if (u < o.prob) {
      pick = &o;
      break;
    }
    u -= o.prob;
  }
  return {pick->next, base_.dwell(state(x).s, a, pick->base_next).sample(rng)};
}

nlohmann::ordered_json ProductSmdp::to_json() const {
  nlohmann::ordered_json doc;
  auto states = nlohmann::ordered_json::array();
  for (StateId x = 0; x < num_states(); ++x)
    states.push_back({{"id", x}, {"state", base_.state_name(states_[x].s)}, {"automaton", states_[x].q}});
  doc["states"] = states;
  doc["initial"] = initial();
  doc["accepting"] = accepting_states();
  return doc;
}

ProductSmdp build_product(const Smdp& m, const Dkcba& d, std::size_t state_budget) {
  if (!m.finalized()) throw Error("SMDP must be finalized before building a product");
  if (!d.automaton.is_deterministic() || !d.automaton.is_complete())
    throw Error("product needs a deterministic complete automaton");
  const auto letter = letter_per_state(m, d.automaton);

  ProductSmdp p(m, d);
  p.letter_ = letter;
  const std::size_t nq = d.num_states();
  p.index_.assign(m.num_states() * nq, kNone);
  std::deque<StateId> frontier;
  auto intern = [&](StateId s, StateId q) {
    StateId& slot = p.index_[s * nq + q];
    if (slot == kNone) {
      if (p.states_.size() >= state_budget) throw CapacityExceeded("product exceeded state budget");
      slot = static_cast<StateId>(p.states_.size());
      p.states_.push_back({s, q});
      frontier.push_back(slot);
    }
    return slot;
  };
  intern(m.initial(), d.successor(d.initial(), letter[m.initial()]));
  const std::size_t na = m.num_actions();
  while (!frontier.empty()) {
    const StateId x = frontier.front();
    frontier.pop_front();
    const auto [s, q] = p.states_[x];
    if (p.rows_.size() < (x + 1) * na) p.rows_.resize((x + 1) * na);
    for (ActionId a : m.enabled_actions(s)) {
      std::vector<ProductOutcome> row;
      for (const auto& o : m.outcomes(s, a)) {
        const StateId y = intern(o.next, d.successor(q, letter[o.next]));
        row.push_back({y, o.prob, o.next});
      }
      std::sort(row.begin(), row.end(), [](const auto& l, const auto& r) { return l.next < r.next; });
      p.rows_[x * na + a] = std::move(row);
    }
  }
  p.rows_.resize(p.states_.size() * na);
  return p;
}

std::size_t WinningRegion::num_states() const { return static_cast<std::size_t>(std::count(states.begin(), states.end(), true)); }

std::size_t WinningRegion::num_pairs() const { return static_cast<std::size_t>(std::count(pairs.begin(), pairs.end(), true)); }

std::vector<StateId> WinningRegion::state_list() const {
  std::vector<StateId> out;
  for (StateId x = 0; x < states.size(); ++x)
    if (states[x]) out.push_back(x);
  return out;
}

WinningRegion exact_winning_region(const ProductSmdp& p) {
  const std::size_t n = p.num_states();
  const std::size_t na = p.num_actions();
  WinningRegion w;
  w.num_actions = na;
  w.states.assign(n, false);
  w.pairs.assign(n * na, false);
  for (StateId x = 0; x < n; ++x) w.states[x] = !p.is_accepting(x);
  bool changed = true;
  while (changed) {
    changed = false;
    for (StateId x = 0; x < n; ++x) {
      if (!w.states[x]) continue;
      bool any = false;
      for (ActionId a : p.enabled_actions(x)) {
        bool safe = true;
        for (const auto& o : p.outcomes(x, a)) safe = safe && w.states[o.next];
        w.pairs[x * na + a] = safe;
        any = any || safe;
      }
      if (!any) {
        w.states[x] = false;
        changed = true;
      }
    }
  }
  for (StateId x = 0; x < n; ++x)
    if (!w.states[x])
      for (ActionId a = 0; a < na; ++a) w.pairs[x * na + a] = false;
  return w;
}

std::vector<double> exact_max_reach_probability(const ProductSmdp& p, const std::vector<bool>& target,
                                                double tol) {
  const std::size_t n = p.num_states();
  if (target.size() != n) throw Error("target size does not match the product");
  const auto reach = can_reach(p, target, nullptr);
  std::vector<double> v(n, 0.0);
  for (StateId x = 0; x < n; ++x)
    if (target[x]) v[x] = 1.0;
  for (std::size_t sweep = 0; sweep < 10'000'000; ++sweep) {
    double residual = 0.0;
    for (StateId x = 0; x < n; ++x) {
      if (target[x] || !reach[x]) continue;
      double best = 0.0;
      for (ActionId a : p.enabled_actions(x)) {
        double q = 0.0;
        for (const auto& o : p.outcomes(x, a)) q += o.prob * v[o.next];
        best = std::max(best, q);
      }
      residual = std::max(residual, std::abs(best - v[x]));
      v[x] = best;
    }
    if (residual < tol) break;
  }
  return v;
}

std::vector<double> policy_reach_probability(const ProductSmdp& p, const std::vector<ActionId>& policy,
                                             const std::vector<bool>& target) {
  const std::size_t n = p.num_states();
  if (target.size() != n || policy.size() != n) throw Error("policy/target size does not match the product");
  for (StateId x = 0; x < n; ++x)
    if (!target[x] && p.outcomes(x, policy[x]).empty())
      throw ActionNotEnabled("policy picks a disabled action in product state " + std::to_string(x));
  const auto reach = can_reach(p, target, &policy);
  std::vector<long> row_of(n, -1);
  long unknowns = 0;
  for (StateId x = 0; x < n; ++x)
    if (reach[x] && !target[x]) row_of[x] = unknowns++;
  std::vector<double> v(n, 0.0);
  for (StateId x = 0; x < n; ++x)
    if (target[x]) v[x] = 1.0;
  if (unknowns == 0) return v;

  std::vector<Eigen::Triplet<double>> entries;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
  for (StateId x = 0; x < n; ++x) {
    const long i = row_of[x];
    if (i < 0) continue;
    entries.emplace_back(i, i, 1.0);
    for (const auto& o : p.outcomes(x, policy[x])) {
      if (target[o.next])
        rhs[i] += o.prob;
      else if (row_of[o.next] >= 0)
        entries.emplace_back(i, row_of[o.next], -o.prob);
    }
  }
  Eigen::SparseMatrix<double> a(unknowns, unknowns);
  a.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error("reachability system is singular");
  const Eigen::VectorXd sol = lu.solve(rhs);
  for (StateId x = 0; x < n; ++x)
    if (row_of[x] >= 0) v[x] = std::clamp(sol[row_of[x]], 0.0, 1.0);
  return v;
}

nlohmann::ordered_json winning_region_to_json(const WinningRegion& w) {
  nlohmann::ordered_json doc;
  doc["states"] = w.state_list();
  auto pairs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < w.pairs.size(); ++i)
    if (w.pairs[i]) pairs.push_back({i / w.num_actions, i % w.num_actions});
  doc["pairs"] = pairs;
  return doc;
}

}  // namespace smdpsynth
