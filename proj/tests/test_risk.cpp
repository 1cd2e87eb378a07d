#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "smdpsynth/errors.hpp"
#include "smdpsynth/gridworld.hpp"
#include "smdpsynth/risk.hpp"
#include "support/fixtures.hpp"

using namespace smdpsynth;

namespace {

RiskModel empty_model(std::size_t states, std::size_t actions, double gamma_r) {
  RiskModel m;
  m.region = WinningRegion{std::vector<bool>(states, true), std::vector<bool>(states * actions, false), actions};
  m.edges.resize(states * actions);
  m.gamma_r = gamma_r;
  return m;
}

void add_edge(RiskModel& m, StateId x, ActionId a, StateId y, double prob, double risk) {
  m.region.pairs[x * m.num_actions() + a] = true;
  m.edges[x * m.num_actions() + a].push_back({y, prob, risk});
}

// Random model on n states, 1 or 2 allowed actions each, 1-3 successors per pair.
RiskModel random_model(std::mt19937_64& rng, std::size_t n, double gamma_r) {
  auto m = empty_model(n, 2, gamma_r);
  std::uniform_real_distribution<double> risk(0.0, 5.0), w(0.1, 1.0);
  for (StateId x = 0; x < n; ++x)
    for (ActionId a = 0; a < 2; ++a) {
      if (a == 1 && rng() % 3 == 0) continue;
      const std::size_t k = 1 + rng() % 3;
      std::vector<double> weights(k);
      double total = 0.0;
      for (auto& v : weights) total += v = w(rng);
      for (std::size_t i = 0; i < k; ++i) add_edge(m, x, a, static_cast<StateId>(rng() % n), weights[i] / total, risk(rng));
    }
  return m;
}

// Dense solve for a fixed policy: independent of the sparse evaluator.
std::vector<double> dense_eval(const RiskModel& m, const PositionalPolicy& pi) {
  const auto n = static_cast<Eigen::Index>(m.num_states());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (StateId x = 0; x < m.num_states(); ++x)
    for (const auto& e : m.edges[x * m.num_actions() + pi[x]]) {
      a(x, e.next) -= m.gamma_r * e.prob;
      b[x] += e.prob * e.risk;
    }
  const Eigen::VectorXd v = a.partialPivLu().solve(b);
  return {v.data(), v.data() + n};
}

}  // namespace

TEST_CASE("risk_value_iteration: closed forms") {
  auto loop = empty_model(1, 1, 0.9);
  add_edge(loop, 0, 0, 0, 1.0, 1.0);
  const auto q = risk_value_iteration(loop);
  CHECK(std::abs(q.value(0, 0, 1) - 10.0) < 1e-9);
  CHECK(q.residual < 1e-9);
  CHECK(std::abs(evaluate_policy_risk(loop, {0})[0] - 10.0) < 1e-12);

  auto two = empty_model(2, 2, 0.9);
  add_edge(two, 0, 0, 1, 1.0, 1.0);
  add_edge(two, 0, 1, 1, 1.0, 2.0);
  add_edge(two, 1, 0, 1, 1.0, 0.0);
  const auto q2 = risk_value_iteration(two);
  CHECK(q2.value(0, 0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q2.value(0, 1, 2) == doctest::Approx(2.0).epsilon(1e-12));
  const auto pi = extract_pi_win(two, q2);
  CHECK(pi[0] == 0);
  CHECK(pi[1] == 0);

  auto myopic = empty_model(2, 1, 0.0);
  add_edge(myopic, 0, 0, 0, 0.25, 4.0);
  add_edge(myopic, 0, 0, 1, 0.75, 1.0);
  add_edge(myopic, 1, 0, 0, 1.0, 3.0);
  const auto v = evaluate_policy_risk(myopic, {0, 0});
  CHECK(v[0] == doctest::Approx(1.75));
  CHECK(v[1] == doctest::Approx(3.0));
}

TEST_CASE("extract_pi_win: argmin over the allowed actions") {
  auto m = empty_model(2, 2, 0.5);
  add_edge(m, 0, 0, 0, 1.0, 5.0);
  add_edge(m, 0, 1, 0, 1.0, 1.5);
  add_edge(m, 1, 1, 1, 1.0, 9.0);
  const auto q = risk_value_iteration(m);
  CHECK(q.value(0, 0, 2) == doctest::Approx(5.0 + 0.5 * 3.0));
  CHECK(q.value(0, 1, 2) == doctest::Approx(3.0));
  const auto pi = extract_pi_win(m, q);
  CHECK(pi == PositionalPolicy{1, 1});
  CHECK(m.allowed(1) == std::vector<ActionId>{1});

  RiskQ tie{{1.0, 1.0, std::nan(""), 2.0}};
  CHECK(extract_pi_win(m, tie)[0] == 0);
}

TEST_CASE("risk_value_iteration: residuals and truncated-horizon oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_model(rng, 20, 0.9);
    const double tol = 1e-10;
    const auto q = risk_value_iteration(m, tol);
    CHECK(q.residual < 1e-9);
    for (std::size_t i = 2; i < q.residuals.size(); ++i) CHECK(q.residuals[i] <= q.residuals[i - 1] * (1.0 + 1e-12));
    // Horizon H with 0.9^H * 5 / 0.1 < tol.
    const int horizon = static_cast<int>(std::ceil(std::log(tol * 0.1 / 5.0) / std::log(0.9)));
    std::vector<double> v(20, 0.0);
    std::vector<double> qh(40, 0.0);
    for (int h = 0; h < horizon; ++h) {
      for (StateId x = 0; x < 20; ++x)
        for (ActionId a = 0; a < 2; ++a) {
          if (!m.region.contains(x, a)) continue;
          double total = 0.0;
          for (const auto& e : m.edges[x * 2 + a]) total += e.prob * (e.risk + 0.9 * v[e.next]);
          qh[x * 2 + a] = total;
        }
      for (StateId x = 0; x < 20; ++x) {
        v[x] = qh[x * 2];
        if (m.region.contains(x, 1)) v[x] = std::min(v[x], qh[x * 2 + 1]);
      }
    }
    for (StateId x = 0; x < 20; ++x)
      for (ActionId a = 0; a < 2; ++a)
        if (m.region.contains(x, a)) CHECK(std::abs(q.value(x, a, 2) - qh[x * 2 + a]) < 2 * tol);
  }
}

TEST_CASE("extract_pi_win: pointwise optimal among all positional policies") {
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + rng() % 18;
    const auto m = random_model(rng, n, trial % 2 ? 0.9 : 0.5);
    std::vector<std::vector<ActionId>> allowed;
    double count = 1.0;
    for (StateId x = 0; x < n; ++x) {
      allowed.push_back(m.allowed(x));
      count *= static_cast<double>(allowed.back().size());
    }
    if (count > 1e4) continue;
    ++checked;
    const auto q = risk_value_iteration(m);
    const auto best = extract_pi_win(m, q);
    const auto v_best = evaluate_policy_risk(m, best);
    const auto dense = dense_eval(m, best);
    std::vector<std::size_t> digit(n, 0);
    for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
      PositionalPolicy pi(n);
      for (StateId x = 0; x < n; ++x) pi[x] = allowed[x][digit[x]];
      const auto v = dense_eval(m, pi);
      for (StateId x = 0; x < n; ++x) REQUIRE(v_best[x] <= v[x] + 1e-9);
      for (StateId x = 0; x < n; ++x)
        if (++digit[x] < allowed[x].size()) break;
        else digit[x] = 0;
    }
    for (StateId x = 0; x < n; ++x) {
      CHECK(v_best[x] == doctest::Approx(dense[x]).epsilon(1e-10));
      CHECK(std::abs(v_best[x] - q.value(x, best[x], 2)) < 1e-9);
    }
  }
  CHECK(checked >= 10);
}

TEST_CASE("combine_policy and evaluation errors") {
  const std::vector<bool> winning{true, false, true};
  const PositionalPolicy win{2, kNoAction, 0};
  const PositionalPolicy tr{kNoAction, 1, kNoAction};
  CHECK(combine_policy(win, tr, winning) == PositionalPolicy{2, 1, 0});
  CHECK(combine_policy({2, 1, 0}, PositionalPolicy(3, kNoAction), {true, true, true}) == PositionalPolicy{2, 1, 0});
  CHECK_THROWS_AS(combine_policy(win, PositionalPolicy(3, kNoAction), winning), DomainGap);

  auto m = empty_model(2, 2, 0.9);
  add_edge(m, 0, 0, 1, 1.0, 1.0);
  add_edge(m, 1, 0, 1, 1.0, 1.0);
  CHECK_THROWS_AS(evaluate_policy_risk(m, {1, 0}), PolicyLeavesW);
  m.region.states[1] = false;
  CHECK_THROWS_AS(evaluate_policy_risk(m, {0, kNoAction}), PolicyLeavesW);
  CHECK_THROWS_AS(risk_value_iteration(m), PolicyLeavesW);

  auto bad = empty_model(1, 1, 0.9);
  add_edge(bad, 0, 0, 0, 1.0, INFINITY);
  CHECK_THROWS_AS(risk_value_iteration(bad), NonfiniteRisk);
}

TEST_CASE("risk models from the product") {
  const auto m1 = testsupport::make_m1();
  const auto p = build_product(m1, testsupport::spec_automaton("G !c", {"c"}, 0));
  const auto w = exact_winning_region(p);
  const auto exact = exact_risk_model(p, w, RiskFunctional::mean_plus_sigma(1.0), 0.9);
  // Only s0 with action a: Exp(1) self-loop, risk 2.
  const auto q = risk_value_iteration(exact);
  CHECK(std::abs(q.value(p.initial(), 0, 2) - 20.0) < 1e-9);

  // The pooled posterior for (s0, b) points at s1, outside W; for (s0, a) the
  // successor stays inside.
  PosteriorStore post(2, 2);
  post.observe(0, 0, 0, 0.5);
  post.observe(0, 0, 0, 1.5);
  post.observe(0, 1, 1, 1.0);
  const auto est = estimated_risk_model(p, w, post, RiskFunctional::mean_plus_sigma(1.0), 0.9);
  const auto& row = est.edges[p.initial() * 2 + 0];
  REQUIRE(row.size() == 1);
  CHECK(row[0].prob == 1.0);
  const auto lomax = post.predictive_dwell(0, 0, 0);
  CHECK(row[0].risk == doctest::Approx(lomax.mean() + std::sqrt(lomax.variance())));
  CHECK(est.renormalized == 0);

  // A winning pair whose estimated support partly leaves W is renormalized.
  post.observe(0, 0, 1, 1.0);
  const auto leaky = estimated_risk_model(p, w, post, RiskFunctional::mean_plus_sigma(1.0), 0.9);
  CHECK(leaky.renormalized == 1);
  CHECK(leaky.dropped_mass == doctest::Approx(2.0 / 5.0));
  CHECK(leaky.edges[p.initial() * 2][0].prob == 1.0);

  PosteriorStore empty(2, 2);
  CHECK_THROWS_AS(estimated_risk_model(p, w, empty, RiskFunctional::mean_plus_sigma(1.0), 0.9), UntrackedPair);
  CHECK_THROWS_AS(exact_risk_model(p, w, RiskFunctional::mean_plus_sigma(1.0), 1.0), ConfigError);
}

TEST_CASE("grid: the risk-optimal policy keeps to cheap cells") {
  GridConfig g;
  g.width = 4;
  g.height = 4;
  g.initial = {4, 4};
  g.labels = {{"a", {{1, 4}}}, {"b", {{2, 4}}}, {"c", {{3, 1}, {3, 2}}}};
  const auto p = build_product(build_gridworld(g), testsupport::spec_automaton("G F a & G F b & G !c", {"a", "b", "c"}, 5));
  const auto w = exact_winning_region(p);
  const auto m = exact_risk_model(p, w, RiskFunctional::mean_plus_sigma(1.0), 0.9);
  const auto pi = extract_pi_win(m, risk_value_iteration(m));
  Rng rng = make_stream(5, 0);
  auto mean_risk = [&](bool optimal) {
    StateId x = w.state_list().front();
    double total = 0.0;
    for (int step = 0; step < 10'000; ++step) {
      const auto allowed = m.allowed(x);
      const ActionId a = optimal ? pi[x] : allowed[rng() % allowed.size()];
      const auto s = p.sample_step(x, a, rng);
      total += risk_of(p.dwell(x, a, s.next), RiskFunctional::mean_plus_sigma(1.0));
      REQUIRE(w.contains(s.next));
      x = s.next;
    }
    return total / 10'000;
  };
  const double best = mean_risk(true);
  const double uniform = mean_risk(false);
  MESSAGE("mean step risk: optimal " << best << ", uniform " << uniform);
  CHECK(best < uniform);
}
