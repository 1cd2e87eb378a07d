#pragma once

// Small SMDPs shared by the model, product, learning and planning tests.

#include <random>
#include <string>
#include <vector>

#include "smdpsynth/dkcba.hpp"
#include "smdpsynth/ltl_automaton.hpp"
#include "smdpsynth/product.hpp"
#include "smdpsynth/smdp.hpp"

namespace testsupport {

using namespace smdpsynth;

/// s0: a -> s0 (rate 1), b -> s1 (rate 2).
/// s1: a -> s0 / s1 w.p. 0.5 each (rates 1 and 0.5), b -> s1 (rate 4).
/// L(s1) = {c}; initial s0.
inline Smdp make_m1() {
  Smdp m({"s0", "s1"}, {"a", "b"}, {"c"});
  m.add_transition(0, 0, 0, 1.0, DwellDistribution::exponential(1.0));
  m.add_transition(0, 1, 1, 1.0, DwellDistribution::exponential(2.0));
  m.add_transition(1, 0, 0, 0.5, DwellDistribution::exponential(1.0));
  m.add_transition(1, 0, 1, 0.5, DwellDistribution::exponential(0.5));
  m.add_transition(1, 1, 1, 1.0, DwellDistribution::exponential(4.0));
  m.set_label(1, 1);
  m.finalize();
  return m;
}

/// Determinized K-co-Buchi automaton for `formula` over `ap`.
inline Dkcba spec_automaton(const std::string& formula, const std::vector<std::string>& ap, int bound) {
  return determinize_kcba(ltl_to_cba(ltl::parse(formula), {ap}), bound);
}

/// Chain used for reachability checks. Labels: s3 = {goal}, s4 = {bad}.
///   s0: a -> s1 (0.5) | s4 (0.5);  b -> s0 (0.2) | s2 (0.8)
///   s1: a -> s3;                   b -> s0 (0.5) | s4 (0.5)
///   s2: a -> s2 (0.3) | s4 (0.7);  b -> s1 (0.6) | s4 (0.4)
///   s3, s4 absorbing.
inline Smdp make_chain() {
  Smdp m({"s0", "s1", "s2", "s3", "s4"}, {"a", "b"}, {"goal", "bad"});
  const auto d = DwellDistribution::exponential(1.0);
  m.add_transition(0, 0, 1, 0.5, d);
  m.add_transition(0, 0, 4, 0.5, d);
  m.add_transition(0, 1, 0, 0.2, d);
  m.add_transition(0, 1, 2, 0.8, d);
  m.add_transition(1, 0, 3, 1.0, d);
  m.add_transition(1, 1, 0, 0.5, d);
  m.add_transition(1, 1, 4, 0.5, d);
  m.add_transition(2, 0, 2, 0.3, d);
  m.add_transition(2, 0, 4, 0.7, d);
  m.add_transition(2, 1, 1, 0.6, d);
  m.add_transition(2, 1, 4, 0.4, d);
  for (StateId s : {3u, 4u})
    for (ActionId a : {0u, 1u}) m.add_transition(s, a, s, 1.0, d);
  m.set_label(3, 1);
  m.set_label(4, 2);
  m.finalize();
  return m;
}

/// One-state automaton that loops on every letter and never accepts.
inline Dkcba trivial_dkcba(const std::vector<std::string>& ap) {
  Dkcba d;
  d.automaton = OmegaAutomaton(1, ap);
  for (Letter l = 0; l < d.automaton.num_letters(); ++l) d.automaton.add_transition(0, l, 0);
  d.counters = {CountingFunction{0}};
  return d;
}

/// Product states whose SMDP component satisfies `pred`.
template <typename Pred>
std::vector<bool> product_states_where(const ProductSmdp& p, Pred pred) {
  std::vector<bool> out(p.num_states());
  for (StateId x = 0; x < p.num_states(); ++x) out[x] = pred(p.state(x).s);
  return out;
}

/// Random SMDP with sparse rows (1-3 successors per enabled pair), random
/// labels over `ap`, exponential dwell rates in [0.5, 5].
inline Smdp random_smdp(std::mt19937_64& rng, std::size_t states, std::size_t actions,
                        const std::vector<std::string>& ap, double label_prob = 0.25) {
  std::vector<std::string> names, acts;
  for (std::size_t i = 0; i < states; ++i) names.push_back("s" + std::to_string(i));
  for (std::size_t i = 0; i < actions; ++i) acts.push_back("a" + std::to_string(i));
  Smdp m(names, acts, ap);
  std::uniform_int_distribution<std::size_t> pick(0, states - 1);
  std::uniform_real_distribution<double> rate(0.5, 5.0), w(0.1, 1.0);
  std::bernoulli_distribution label(label_prob), enabled(0.8);
  for (StateId s = 0; s < states; ++s) {
    Letter l = 0;
    for (std::size_t i = 0; i < ap.size(); ++i)
      if (label(rng)) l |= Letter{1} << i;
    m.set_label(s, l);
    for (ActionId a = 0; a < actions; ++a) {
      if (a > 0 && !enabled(rng)) continue;
      const std::size_t k = 1 + rng() % 3;
      std::vector<StateId> succ;
      for (std::size_t i = 0; i < k; ++i) succ.push_back(static_cast<StateId>(pick(rng)));
      std::sort(succ.begin(), succ.end());
      succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
      std::vector<double> weights;
      double total = 0.0;
      for (std::size_t i = 0; i < succ.size(); ++i) total += weights.emplace_back(w(rng));
      double assigned = 0.0;
      for (std::size_t i = 0; i < succ.size(); ++i) {
        const double p = i + 1 == succ.size() ? 1.0 - assigned : weights[i] / total;
        assigned += p;
        m.add_transition(s, a, succ[i], p, DwellDistribution::exponential(rate(rng)));
      }
    }
  }
  m.finalize();
  return m;
}

}  // namespace testsupport
