#include "smdpsynth/risk.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "smdpsynth/errors.hpp"

namespace smdpsynth {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_finite(double risk, StateId x, ActionId a) {
  if (!std::isfinite(risk) || risk < 0.0)
    throw NonfiniteRisk("risk of pair (" + std::to_string(x) + ", " + std::to_string(a) + ") is not a finite nonnegative number");
}

// min over A_phi(x) of Q(x, .) for every winning state.
std::vector<double> state_minimum(const RiskModel& m, const std::vector<double>& q) {
  const std::size_t na = m.num_actions();
  std::vector<double> v(m.num_states(), kNaN);
  for (StateId x = 0; x < m.num_states(); ++x) {
    if (!m.region.states[x]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (ActionId a = 0; a < na; ++a)
      if (m.region.pairs[x * na + a]) best = std::min(best, q[x * na + a]);
    v[x] = best;
  }
  return v;
}

double backup(const RiskModel& m, const std::vector<double>& v, std::size_t i) {
  double total = 0.0;
  for (const auto& e : m.edges[i]) total += e.prob * (e.risk + m.gamma_r * v[e.next]);
  return total;
}

}  // namespace

std::vector<ActionId> RiskModel::allowed(StateId x) const {
  std::vector<ActionId> out;
  for (ActionId a = 0; a < num_actions(); ++a)
    if (region.contains(x, a)) out.push_back(a);
  return out;
}

RiskModel exact_risk_model(const ProductSmdp& p, const WinningRegion& w, const RiskFunctional& f, double gamma_r) {
  if (!(gamma_r >= 0.0 && gamma_r < 1.0)) throw ConfigError("gamma_r must lie in [0, 1)");
  const std::size_t na = p.num_actions();
  RiskModel m{w, std::vector<std::vector<RiskModel::Edge>>(p.num_states() * na), gamma_r};
  for (StateId x = 0; x < p.num_states(); ++x)
    for (ActionId a = 0; a < na; ++a) {
      if (!w.contains(x, a)) continue;
      for (const auto& o : p.outcomes(x, a)) {
        const double risk = risk_of(p.dwell(x, a, o.next), f);
        require_finite(risk, x, a);
        m.edges[x * na + a].push_back({o.next, o.prob, risk});
      }
    }
  return m;
}

RiskModel estimated_risk_model(const ProductSmdp& p, const WinningRegion& w, const PosteriorStore& post,
                               const RiskFunctional& f, double gamma_r) {
  if (!(gamma_r >= 0.0 && gamma_r < 1.0)) throw ConfigError("gamma_r must lie in [0, 1)");
  const std::size_t na = p.num_actions();
  RiskModel m{w, std::vector<std::vector<RiskModel::Edge>>(p.num_states() * na), gamma_r};
  for (StateId x = 0; x < p.num_states(); ++x)
    for (ActionId a = 0; a < na; ++a) {
      if (!w.contains(x, a)) continue;
      const StateId s = p.state(x).s;
      const auto support = post.support(s, a);
      const auto pred = post.predictive_transition(s, a);
      auto& row = m.edges[x * na + a];
      double kept = 0.0;
      for (std::size_t i = 0; i < support.size(); ++i) {
        const auto y = p.successor(x, support[i]);
        if (!y || !w.contains(*y)) {
          m.dropped_mass += pred[i];
          continue;
        }
        const double risk = risk_of(post.predictive_dwell(s, a, support[i]), f);
        require_finite(risk, x, a);
        row.push_back({*y, pred[i], risk});
        kept += pred[i];
      }
      if (row.empty())
        throw PolicyLeavesW("estimated support of pair (" + std::to_string(x) + ", " + std::to_string(a) +
                            ") lies outside W");
      if (kept < 1.0 - 1e-12) {
        ++m.renormalized;
        for (auto& e : row) e.prob /= kept;
      }
    }
  return m;
}

RiskQ risk_value_iteration(const RiskModel& m, double tol, std::size_t max_iterations) {
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  const std::size_t na = m.num_actions();
  RiskQ out;
  out.q.assign(m.num_states() * na, kNaN);
  for (std::size_t i = 0; i < out.q.size(); ++i) {
    if (!m.region.pairs[i]) continue;
    for (const auto& e : m.edges[i]) {
      require_finite(e.risk, static_cast<StateId>(i / na), static_cast<ActionId>(i % na));
      if (!m.region.contains(e.next)) throw PolicyLeavesW("risk model support leaves W");
    }
    out.q[i] = 0.0;
  }
  std::vector<double> next = out.q;
  // A sweep change d bounds the distance to the fixed point by d gamma / (1 - gamma).
  const double stop = m.gamma_r > 0.0 ? tol * (1.0 - m.gamma_r) / m.gamma_r : tol;
  while (out.iterations < max_iterations) {
    const auto v = state_minimum(m, out.q);
    double change = 0.0;
    for (std::size_t i = 0; i < out.q.size(); ++i) {
      if (!m.region.pairs[i]) continue;
      next[i] = backup(m, v, i);
      change = std::max(change, std::abs(next[i] - out.q[i]));
    }
    out.q.swap(next);
    ++out.iterations;
    out.residuals.push_back(change);
    if (change < stop || change == 0.0) break;
  }
  const auto v = state_minimum(m, out.q);
  out.residual = 0.0;
  for (std::size_t i = 0; i < out.q.size(); ++i)
    if (m.region.pairs[i]) out.residual = std::max(out.residual, std::abs(backup(m, v, i) - out.q[i]));
  return out;
}

PositionalPolicy extract_pi_win(const RiskModel& m, const RiskQ& q) {
  const std::size_t na = m.num_actions();
  PositionalPolicy pi(m.num_states(), kNoAction);
  for (StateId x = 0; x < m.num_states(); ++x) {
    if (!m.region.states[x]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (ActionId a = 0; a < na; ++a)
      if (m.region.pairs[x * na + a] && q.q[x * na + a] < best) {
        best = q.q[x * na + a];
        pi[x] = a;
      }
  }
  return pi;
}

PositionalPolicy combine_policy(const PositionalPolicy& pi_win, const PositionalPolicy& pi_tr,
                                const std::vector<bool>& winning) {
  if (pi_win.size() != winning.size() || pi_tr.size() != winning.size())
    throw DomainGap("policy sizes differ from the state count");
  PositionalPolicy pi(winning.size(), kNoAction);
  for (StateId x = 0; x < winning.size(); ++x) {
    pi[x] = winning[x] ? pi_win[x] : pi_tr[x];
    if (pi[x] == kNoAction) throw DomainGap("no action for product state " + std::to_string(x));
  }
  return pi;
}

std::vector<double> evaluate_policy_risk(const RiskModel& m, const PositionalPolicy& pi) {
  const std::size_t na = m.num_actions();
  std::vector<Eigen::Index> index(m.num_states(), -1);
  Eigen::Index n = 0;
  for (StateId x = 0; x < m.num_states(); ++x)
    if (m.region.states[x]) index[x] = n++;
  std::vector<Eigen::Triplet<double>> entries;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (StateId x = 0; x < m.num_states(); ++x) {
    if (index[x] < 0) continue;
    const ActionId a = pi.at(x);
    if (a == kNoAction || a >= na || !m.region.pairs[x * na + a])
      throw PolicyLeavesW("policy action at state " + std::to_string(x) + " is not allowed in W");
    entries.emplace_back(index[x], index[x], 1.0);
    for (const auto& e : m.edges[x * na + a]) {
      if (index[e.next] < 0) throw PolicyLeavesW("policy leaves W from state " + std::to_string(x));
      rhs[index[x]] += e.prob * e.risk;
      entries.emplace_back(index[x], index[e.next], -m.gamma_r * e.prob);
    }
  }
  std::vector<double> v(m.num_states(), kNaN);
  if (n == 0) return v;
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error("risk evaluation system is singular");
  const Eigen::VectorXd sol = lu.solve(rhs);
  for (StateId x = 0; x < m.num_states(); ++x)
    if (index[x] >= 0) v[x] = sol[index[x]];
  return v;
}

}  // namespace smdpsynth
