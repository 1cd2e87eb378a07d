#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "smdpsynth/errors.hpp"
#include "smdpsynth/gridworld.hpp"
#include "smdpsynth/product.hpp"
#include "support/fixtures.hpp"

using namespace smdpsynth;

namespace {

// Dense Gaussian elimination for a fixed policy: independent of the sparse solver.
std::vector<double> dense_policy_reach(const ProductSmdp& p, const std::vector<ActionId>& pi,
                                       const std::vector<bool>& target) {
  const auto n = static_cast<Eigen::Index>(p.num_states());
  // Iterate to get the states with positive probability, then solve on them.
  std::vector<double> v(p.num_states(), 0.0);
  for (StateId x = 0; x < p.num_states(); ++x) v[x] = target[x] ? 1.0 : 0.0;
  for (int it = 0; it < 200; ++it)
    for (StateId x = 0; x < p.num_states(); ++x) {
      if (target[x]) continue;
      double s = 0.0;
      for (const auto& o : p.outcomes(x, pi[x])) s += o.prob * v[o.next];
      v[x] = s;
    }
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (StateId x = 0; x < p.num_states(); ++x) {
    if (target[x]) {
      b[x] = 1.0;
      continue;
    }
    if (v[x] == 0.0) continue;  // cannot reach: row stays x = 0
    for (const auto& o : p.outcomes(x, pi[x])) a(x, o.next) -= o.prob;
  }
  const Eigen::VectorXd sol = a.fullPivLu().solve(b);
  return std::vector<double>(sol.data(), sol.data() + n);
}

void check_region_properties(const ProductSmdp& p, const WinningRegion& w) {
  for (StateId x = 0; x < p.num_states(); ++x) {
    if (!w.contains(x)) {
      for (ActionId a = 0; a < p.num_actions(); ++a) CHECK_FALSE(w.contains(x, a));
      continue;
    }
    CHECK_FALSE(p.is_accepting(x));
    bool some = false;
    for (ActionId a : p.enabled_actions(x)) {
      bool inside = true;
      for (const auto& o : p.outcomes(x, a)) inside = inside && w.contains(o.next);
      CHECK(w.contains(x, a) == inside);
      some = some || inside;
    }
    CHECK(some);
  }
}

}  // namespace

TEST_CASE("build_product: M1 with G !c") {
  const auto m1 = testsupport::make_m1();
  const auto d = testsupport::spec_automaton("G !c", {"c"}, 0);
  CHECK(d.num_states() == 2);
  const auto p = build_product(m1, d);
  CHECK(p.num_states() <= 2 * d.num_states());
  CHECK(p.num_states() == 3);
  CHECK(p.state(p.initial()).s == 0);
  CHECK_FALSE(p.is_accepting(p.initial()));
  // b from s0 enters the c-labeled state and the automaton sink.
  const auto via_b = p.outcomes(p.initial(), 1);
  REQUIRE(via_b.size() == 1);
  CHECK(p.is_accepting(via_b[0].next));
  CHECK(p.outcomes(p.initial(), 0)[0].next == p.initial());
  CHECK(p.accepting_states().size() == 2);
  CHECK(p.find(0, p.state(p.initial()).q) == p.initial());

  const auto w = exact_winning_region(p);
  CHECK(w.state_list() == std::vector<StateId>{p.initial()});
  CHECK(w.num_pairs() == 1);
  CHECK(w.contains(p.initial(), 0));
  CHECK_FALSE(w.contains(p.initial(), 1));
  check_region_properties(p, w);

  const auto doc = winning_region_to_json(w);
  CHECK(doc["states"] == nlohmann::json::array({0}));
  CHECK(doc["pairs"] == nlohmann::json::parse("[[0, 0]]"));
  CHECK(p.to_json()["states"].size() == 3);
}

TEST_CASE("build_product: trivial automaton gives a copy of the SMDP") {
  const auto m = testsupport::make_chain();
  const auto p = build_product(m, testsupport::trivial_dkcba({"goal", "bad"}));
  REQUIRE(p.num_states() == 5);
  for (StateId x = 0; x < 5; ++x)
    for (ActionId a : p.enabled_actions(x)) {
      const auto base = m.outcomes(p.state(x).s, a);
      const auto prod = p.outcomes(x, a);
      REQUIRE(base.size() == prod.size());
      for (const auto& o : prod) CHECK(m.prob(p.state(x).s, a, o.base_next) == o.prob);
    }
  const auto w = exact_winning_region(p);
  CHECK(w.num_states() == 5);
  CHECK(w.num_pairs() == 10);
}

TEST_CASE("build_product: alphabet mismatch") {
  const auto m1 = testsupport::make_m1();
  CHECK_THROWS_AS(build_product(m1, testsupport::spec_automaton("G !d", {"d"}, 0)), AlphabetMismatch);
  // Automaton propositions are matched by name, not position.
  const auto grid = build_gridworld(GridConfig{});
  const auto d = testsupport::spec_automaton("G !c & G F a", {"c", "a"}, 2);
  const auto p = build_product(grid, d);
  const auto w = exact_winning_region(p);
  for (StateId x = 0; x < p.num_states(); ++x)
    if (w.contains(x)) CHECK((grid.label(p.state(x).s) & 0b100) == 0);
}

TEST_CASE("exact_winning_region: everything loses") {
  Smdp m({"x", "y"}, {"go"}, {"c"});
  m.add_transition(0, 0, 0, 0.5, DwellDistribution::exponential(1.0));
  m.add_transition(0, 0, 1, 0.5, DwellDistribution::exponential(1.0));
  m.add_transition(1, 0, 1, 1.0, DwellDistribution::exponential(1.0));
  m.set_label(1, 1);
  m.finalize();
  const auto p = build_product(m, testsupport::spec_automaton("G !c", {"c"}, 0));
  CHECK(exact_winning_region(p).num_states() == 0);
}

TEST_CASE("exact_max_reach_probability: closed forms") {
  Smdp m({"x", "win", "lose"}, {"go"}, {"goal"});
  const auto d = DwellDistribution::exponential(1.0);
  m.add_transition(0, 0, 1, 0.5, d);
  m.add_transition(0, 0, 2, 0.5, d);
  m.add_transition(1, 0, 1, 1.0, d);
  m.add_transition(2, 0, 2, 1.0, d);
  m.set_label(1, 1);
  m.finalize();
  const auto p = build_product(m, testsupport::trivial_dkcba({"goal"}));
  const auto target = testsupport::product_states_where(p, [](StateId s) { return s == 1; });
  const auto v = exact_max_reach_probability(p, target);
  CHECK(v[*p.find(0, 0)] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(v[*p.find(1, 0)] == 1.0);
  CHECK(v[*p.find(2, 0)] == 0.0);
}

TEST_CASE("exact_max_reach_probability: chain against policy enumeration") {
  const auto m = testsupport::make_chain();
  const auto p = build_product(m, testsupport::trivial_dkcba({"goal", "bad"}));
  const auto target = testsupport::product_states_where(p, [](StateId s) { return s == 3; });
  const auto v = exact_max_reach_probability(p, target);
  std::vector<double> best(p.num_states(), 0.0);
  for (unsigned mask = 0; mask < (1u << p.num_states()); ++mask) {
    std::vector<ActionId> pi(p.num_states());
    for (StateId x = 0; x < p.num_states(); ++x) pi[x] = (mask >> x) & 1u;
    const auto dense = dense_policy_reach(p, pi, target);
    const auto sparse = policy_reach_probability(p, pi, target);
    for (StateId x = 0; x < p.num_states(); ++x) {
      CHECK(sparse[x] == doctest::Approx(dense[x]).epsilon(1e-10));
      best[x] = std::max(best[x], dense[x]);
    }
  }
  for (StateId x = 0; x < p.num_states(); ++x) CHECK(v[x] == doctest::Approx(best[x]).epsilon(1e-9));
  const std::vector<double> expected{0.6, 1.0, 0.6, 1.0, 0.0};
  for (StateId s = 0; s < 5; ++s) CHECK(v[*p.find(s, 0)] == doctest::Approx(expected[s]).epsilon(1e-9));
}

TEST_CASE("random products: winning region and reachability properties") {
  std::mt19937_64 rng(31);
  const std::vector<std::string> formulas{"G !q", "G F p & G !q", "G F p", "G (p -> F q)"};
  for (int i = 0; i < 40; ++i) {
    const auto m = testsupport::random_smdp(rng, 2 + rng() % 10, 1 + rng() % 3, {"p", "q"});
    const auto d = testsupport::spec_automaton(formulas[i % formulas.size()], {"p", "q"}, static_cast<int>(rng() % 4));
    const auto p = build_product(m, d);
    for (StateId x = 0; x < p.num_states(); ++x)
      for (ActionId a : p.enabled_actions(x)) {
        double total = 0.0;
        for (const auto& o : p.outcomes(x, a)) {
          total += o.prob;
          REQUIRE(p.successor(x, o.base_next) == o.next);
        }
        REQUIRE(total == doctest::Approx(1.0).epsilon(1e-9));
      }
    const auto w = exact_winning_region(p);
    check_region_properties(p, w);

    // A walk that only uses winning actions never meets the accepting set.
    if (w.num_states() > 0 && i % 4 == 0) {
      Rng walk_rng = make_stream(i, 1);
      const auto states = w.state_list();
      StateId x = states[walk_rng() % states.size()];
      for (int step = 0; step < 100'000; ++step) {
        std::vector<ActionId> safe;
        for (ActionId a : p.enabled_actions(x))
          if (w.contains(x, a)) safe.push_back(a);
        REQUIRE_FALSE(safe.empty());
        x = p.sample_step(x, safe[walk_rng() % safe.size()], walk_rng).next;
        REQUIRE_FALSE(p.is_accepting(x));
      }
    }

    // Monotone in the target and bounded.
    auto bigger = w.states;
    for (StateId x = 0; x < p.num_states(); ++x)
      if (rng() % 5 == 0) bigger[x] = true;
    const auto v1 = exact_max_reach_probability(p, w.states);
    const auto v2 = exact_max_reach_probability(p, bigger);
    for (StateId x = 0; x < p.num_states(); ++x) {
      CHECK(v1[x] >= 0.0);
      CHECK(v1[x] <= 1.0);
      CHECK(v1[x] <= v2[x] + 1e-12);
      if (w.contains(x)) CHECK(v1[x] == 1.0);
    }
  }
}

TEST_CASE("running example product") {
  const auto grid = build_gridworld(GridConfig{});
  const auto d = testsupport::spec_automaton("G F a & G F b & G !c", {"a", "b", "c"}, 20);
  const auto p = build_product(grid, d);
  MESSAGE("product states: " << p.num_states());
  for (StateId x = 0; x < p.num_states(); ++x)
    for (ActionId a : p.enabled_actions(x)) {
      double total = 0.0;
      for (const auto& o : p.outcomes(x, a)) total += o.prob;
      REQUIRE(std::abs(total - 1.0) < 1e-9);
    }
  const auto w = exact_winning_region(p);
  MESSAGE("winning states: " << w.num_states() << ", pairs: " << w.num_pairs());
  CHECK(w.num_states() > 0);
  check_region_properties(p, w);
}
