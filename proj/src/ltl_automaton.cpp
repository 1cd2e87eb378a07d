#include "smdpsynth/ltl_automaton.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <tuple>

#include "smdpsynth/errors.hpp"

namespace smdpsynth {

namespace {

using ltl::Formula;
using ltl::Kind;

// Hash-consed subformulas of an NNF formula.
struct Sub {
  Kind kind;
  int lhs = -1;
  int rhs = -1;
  int atom = -1;  // index into the AP list for Atom / Not(Atom)
};

class Closure {
 public:
  explicit Closure(const std::vector<std::string>& ap) : ap_(ap) {}

  int intern(const Formula& f) {
    Sub s{f.kind()};
    if (f.kind() == Kind::Atom) {
      s.atom = atom_index(f.name());
    } else if (f.kind() == Kind::Not) {
      s.atom = atom_index(f.lhs().name());
    } else {
      if (f.num_children() > 0) s.lhs = intern(f.lhs());
      if (f.num_children() > 1) s.rhs = intern(f.rhs());
    }
    const auto key = std::make_tuple(static_cast<int>(s.kind), s.lhs, s.rhs, s.atom);
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    subs_.push_back(s);
    const int id = static_cast<int>(subs_.size() - 1);
    index_.emplace(key, id);
    return id;
  }

  const Sub& operator[](int id) const { return subs_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return subs_.size(); }

  bool is_literal(int id) const {
    const auto k = subs_[static_cast<std::size_t>(id)].kind;
    return k == Kind::Atom || k == Kind::Not;
  }

 private:
  int atom_index(const std::string& name) const {
    auto it = std::find(ap_.begin(), ap_.end(), name);
    if (it == ap_.end()) throw AlphabetMismatch("atom '" + name + "' not in the alphabet");
    return static_cast<int>(it - ap_.begin());
  }

  const std::vector<std::string>& ap_;
  std::vector<Sub> subs_;
  std::map<std::tuple<int, int, int, int>, int> index_;
};

using IdSet = std::set<int>;

struct TableauNode {
  IdSet incoming;
  IdSet fresh;  // "New": obligations still to be decomposed
  IdSet old;
  IdSet next;
};

constexpr int kInit = 0;

struct Tableau {
  std::vector<TableauNode> nodes;  // nodes[0] is the initial pseudo-node
};

bool contradicts(const Closure& cl, const IdSet& old, int lit) {
  const Sub& s = cl[lit];
  for (int o : old) {
    const Sub& t = cl[o];
    if (t.atom == s.atom && cl.is_literal(o) && t.kind != s.kind) return true;
  }
  return false;
}

// Gerth-Peled-Vardi-Wolper on-the-fly expansion.
Tableau expand(const Closure& cl, int root, std::size_t budget) {
  Tableau t;
  t.nodes.push_back({});
  std::vector<TableauNode> work;
  work.push_back({{kInit}, {root}, {}, {}});
  auto add_fresh = [](TableauNode& n, int id) {
    if (!n.old.count(id)) n.fresh.insert(id);
  };
  while (!work.empty()) {
    TableauNode node = std::move(work.back());
    work.pop_back();
    if (node.fresh.empty()) {
      auto same = std::find_if(t.nodes.begin() + 1, t.nodes.end(), [&](const TableauNode& q) {
        return q.old == node.old && q.next == node.next;
      });
      if (same != t.nodes.end()) {
        same->incoming.insert(node.incoming.begin(), node.incoming.end());
        continue;
      }
      if (t.nodes.size() > budget) throw CapacityExceeded("tableau exceeded state budget");
      const int id = static_cast<int>(t.nodes.size());
      IdSet successors_obligations = node.next;
      t.nodes.push_back(std::move(node));
      work.push_back({{id}, std::move(successors_obligations), {}, {}});
      continue;
    }
    const int eta = *node.fresh.begin();
    node.fresh.erase(node.fresh.begin());
    if (node.old.count(eta)) {
      work.push_back(std::move(node));
      continue;
    }
    const Sub& s = cl[eta];
    switch (s.kind) {
      case Kind::False:
        break;
      case Kind::True:
        node.old.insert(eta);
        work.push_back(std::move(node));
        break;
      case Kind::Atom:
      case Kind::Not:
        if (contradicts(cl, node.old, eta)) break;
        node.old.insert(eta);
        work.push_back(std::move(node));
        break;
      case Kind::And:
        node.old.insert(eta);
        add_fresh(node, s.lhs);
        add_fresh(node, s.rhs);
        work.push_back(std::move(node));
        break;
      case Kind::Next:
        node.old.insert(eta);
        node.next.insert(s.lhs);
        work.push_back(std::move(node));
        break;
      case Kind::Or:
      case Kind::Until:
      case Kind::Release: {
        node.old.insert(eta);
        TableauNode first = node;
        TableauNode second = std::move(node);
        if (s.kind == Kind::Or) {
          add_fresh(first, s.lhs);
          add_fresh(second, s.rhs);
        } else if (s.kind == Kind::Until) {
          add_fresh(first, s.lhs);
          first.next.insert(eta);
          add_fresh(second, s.rhs);
        } else {
          add_fresh(first, s.rhs);
          first.next.insert(eta);
          add_fresh(second, s.lhs);
          add_fresh(second, s.rhs);
        }
        work.push_back(std::move(second));
        work.push_back(std::move(first));
        break;
      }
      default:
        throw Error("tableau expects a formula in negation normal form");
    }
  }
  return t;
}

struct LetterConstraint {
  Letter positive = 0;
  Letter negative = 0;
  bool admits(Letter l) const { return (l & positive) == positive && (l & negative) == 0; }
};

// Quotient by the coarsest bisimulation that respects the accepting flag.
// Runs map to runs with the same accepting visits, so every visit-counting
// acceptance reading is preserved.
OmegaAutomaton bisimulation_quotient(const OmegaAutomaton& a) {
  const std::size_t n = a.num_states();
  std::vector<StateId> block(n);
  for (StateId x = 0; x < n; ++x) block[x] = a.is_accepting(x) ? 1 : 0;
  std::size_t num_blocks = 0;
  while (true) {
    std::map<std::vector<StateId>, StateId> signatures;
    std::vector<StateId> next(n);
    for (StateId x = 0; x < n; ++x) {
      std::vector<StateId> sig{block[x]};
      for (Letter l = 0; l < a.num_letters(); ++l) {
        std::vector<StateId> targets;
        for (StateId y : a.successors(x, l)) targets.push_back(block[y]);
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
        sig.push_back(static_cast<StateId>(targets.size()));
        sig.insert(sig.end(), targets.begin(), targets.end());
      }
      next[x] = signatures.emplace(std::move(sig), static_cast<StateId>(signatures.size())).first->second;
    }
    block = std::move(next);
    if (signatures.size() == num_blocks) break;
    num_blocks = signatures.size();
  }
  // Renumber blocks in order of first occurrence so the initial state stays 0.
  std::vector<StateId> order(num_blocks, static_cast<StateId>(-1));
  StateId fresh = 0;
  for (StateId x = 0; x < n; ++x)
    if (order[block[x]] == static_cast<StateId>(-1)) order[block[x]] = fresh++;
  OmegaAutomaton out(num_blocks, a.atomic_props(), order[block[a.initial()]]);
  for (StateId x = 0; x < n; ++x) {
    out.set_accepting(order[block[x]], a.is_accepting(x));
    for (Letter l = 0; l < a.num_letters(); ++l)
      for (StateId y : a.successors(x, l)) out.add_transition(order[block[x]], l, order[block[y]]);
  }
  return out;
}

}  // namespace

OmegaAutomaton ltl_to_nba(const ltl::Formula& phi, const TranslationOptions& opts) {
  std::vector<std::string> ap = opts.atomic_props.empty() ? ltl::atoms(phi) : opts.atomic_props;
  const Formula nnf = ltl::to_nnf(phi);
  Closure cl(ap);
  const int root = cl.intern(nnf);
  const Tableau tab = expand(cl, root, opts.state_budget);
  const std::size_t num_nodes = tab.nodes.size();

  std::vector<int> untils;
  for (std::size_t i = 0; i < cl.size(); ++i)
    if (cl[static_cast<int>(i)].kind == Kind::Until) untils.push_back(static_cast<int>(i));
  const std::size_t k = untils.size();

  // member[q][i]: node q belongs to the i-th generalized acceptance set.
  std::vector<std::vector<bool>> member(num_nodes, std::vector<bool>(std::max<std::size_t>(k, 1), false));
  std::vector<LetterConstraint> constraint(num_nodes);
  std::vector<std::vector<int>> succ(num_nodes);
  for (std::size_t q = 1; q < num_nodes; ++q) {
    const auto& node = tab.nodes[q];
    for (std::size_t i = 0; i < k; ++i)
      member[q][i] = !node.old.count(untils[i]) || node.old.count(cl[untils[i]].rhs);
    if (k == 0) member[q][0] = true;
    for (int o : node.old) {
      const Sub& s = cl[o];
      if (s.kind == Kind::Atom) constraint[q].positive |= Letter{1} << s.atom;
      if (s.kind == Kind::Not) constraint[q].negative |= Letter{1} << s.atom;
    }
    for (int from : node.incoming) succ[static_cast<std::size_t>(from)].push_back(static_cast<int>(q));
  }

  // Degeneralize: product with a level counter that skips every acceptance
  // set the node already belongs to; a state is accepting when its counter
  // wraps around. The init pseudo-node sits at level 0 outside every set.
  auto jump = [&](std::size_t q, std::size_t level) {
    while (level < k && member[q][level]) ++level;
    return level;
  };
  auto level_after = [&](std::size_t q, std::size_t level) -> std::size_t {
    if (q == kInit || k == 0) return 0;
    const std::size_t j = jump(q, level);
    return j == k ? jump(q, 0) % k : j;
  };
  auto wraps = [&](std::size_t q, std::size_t level) {
    if (q == kInit) return false;
    return k == 0 || jump(q, level) == k;
  };
  std::map<std::pair<std::size_t, std::size_t>, StateId> ids;
  std::vector<std::pair<std::size_t, std::size_t>> states;
  std::vector<std::vector<StateId>> dsucc;
  std::deque<StateId> frontier;
  auto intern = [&](std::size_t q, std::size_t level) {
    auto [it, fresh] = ids.emplace(std::make_pair(q, level), static_cast<StateId>(states.size()));
    if (fresh) {
      if (states.size() >= opts.state_budget) throw CapacityExceeded("Buchi automaton exceeded state budget");
      states.emplace_back(q, level);
      dsucc.emplace_back();
      frontier.push_back(it->second);
    }
    return it->second;
  };
  intern(kInit, 0);
  while (!frontier.empty()) {
    const StateId id = frontier.front();
    frontier.pop_front();
    const auto [q, level] = states[id];
    const std::size_t nl = level_after(q, level);
    for (int r : succ[q]) {
      const StateId to = intern(static_cast<std::size_t>(r), nl);
      dsucc[id].push_back(to);
    }
  }
  std::vector<bool> accepting(states.size(), false);
  for (std::size_t i = 0; i < states.size(); ++i)
    accepting[i] = wraps(states[i].first, states[i].second);

  // Keep only states that can reach a cycle through an accepting state.
  const std::size_t n = states.size();
  std::vector<std::vector<StateId>> pred(n);
  for (StateId v = 0; v < n; ++v)
    for (StateId w : dsucc[v]) pred[w].push_back(v);
  // A state is on an accepting cycle iff it is accepting and reaches itself.
  std::vector<bool> useful(n, false);
  std::deque<StateId> queue;
  for (StateId v = 0; v < n; ++v) {
    if (!accepting[v]) continue;
    std::vector<bool> seen(n, false);
    std::deque<StateId> bfs(dsucc[v].begin(), dsucc[v].end());
    bool cyclic = false;
    while (!bfs.empty() && !cyclic) {
      const StateId w = bfs.front();
      bfs.pop_front();
      if (w == v) cyclic = true;
      if (seen[w]) continue;
      seen[w] = true;
      for (StateId u : dsucc[w]) bfs.push_back(u);
    }
    if (cyclic && !useful[v]) {
      useful[v] = true;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const StateId w = queue.front();
    queue.pop_front();
    for (StateId v : pred[w])
      if (!useful[v]) {
        useful[v] = true;
        queue.push_back(v);
      }
  }
  useful[0] = true;

  std::vector<StateId> remap(n, 0);
  StateId next_id = 0;
  for (StateId v = 0; v < n; ++v)
    if (useful[v]) remap[v] = next_id++;
  OmegaAutomaton out(next_id, ap, 0);
  for (StateId v = 0; v < n; ++v) {
    if (!useful[v]) continue;
    out.set_accepting(remap[v], accepting[v]);
    for (StateId w : dsucc[v]) {
      if (!useful[w]) continue;
      const auto& c = constraint[states[w].first];
      for (Letter l = 0; l < out.num_letters(); ++l)
        if (c.admits(l)) out.add_transition(remap[v], l, remap[w]);
    }
  }
  return bisimulation_quotient(out);
}

OmegaAutomaton ltl_to_cba(const ltl::Formula& phi, const TranslationOptions& opts) {
  TranslationOptions o = opts;
  if (o.atomic_props.empty()) o.atomic_props = ltl::atoms(phi);
  return ltl_to_nba(ltl::neg(phi), o);
}

}  // namespace smdpsynth
