#pragma once

#include <vector>

#include "smdpsynth/bayes.hpp"
#include "smdpsynth/policy.hpp"
#include "smdpsynth/product.hpp"

namespace smdpsynth {

/// Transitions and per-transition risks on a winning region, restricted to
/// the allowed actions A_phi(x) = {a | (x, a) in W_p}.
struct RiskModel {
  struct Edge {
    StateId next;
    double prob;
    double risk;
  };

  WinningRegion region;
  std::vector<std::vector<Edge>> edges;  ///< indexed x * |A| + a, empty outside W_p
  double gamma_r = 0.9;
  /// Pairs whose estimated mass outside W was dropped and renormalized.
  std::size_t renormalized = 0;
  double dropped_mass = 0.0;

  std::size_t num_states() const { return region.states.size(); }
  std::size_t num_actions() const { return region.num_actions; }
  std::vector<ActionId> allowed(StateId x) const;
};

/// Model with the true T and f(D) of the product.
RiskModel exact_risk_model(const ProductSmdp& p, const WinningRegion& w, const RiskFunctional& f, double gamma_r);

/// Model with the posterior predictive T and f(Lomax) per triple. Estimated
/// mass on successors outside W is dropped and the rest renormalized. Throws
/// UntrackedPair when a winning pair has no data and NonfiniteRisk when a risk
/// is not finite.
RiskModel estimated_risk_model(const ProductSmdp& p, const WinningRegion& w, const PosteriorStore& post,
                               const RiskFunctional& f, double gamma_r);

struct RiskQ {
  std::vector<double> q;  ///< indexed x * |A| + a, NaN outside W_p
  std::size_t iterations = 0;
  double residual = 0.0;
  std::vector<double> residuals;  ///< sup-norm change per sweep

  double value(StateId x, ActionId a, std::size_t num_actions) const { return q.at(x * num_actions + a); }
};

/// Jacobi sweeps of Q(x,a) = sum T (risk + gamma_r min_{a' in A_phi(x')} Q(x',a'))
/// until the sup-norm distance to the fixed point is provably below `tol`.
/// Throws NonfiniteRisk.
RiskQ risk_value_iteration(const RiskModel& m, double tol = 1e-11, std::size_t max_iterations = 1'000'000);

/// argmin over A_phi(x) per winning state, lowest action id on ties;
/// kNoAction outside W.
PositionalPolicy extract_pi_win(const RiskModel& m, const RiskQ& q);

/// pi_win on W, pi_tr elsewhere. Throws DomainGap when a state is covered by
/// neither.
PositionalPolicy combine_policy(const PositionalPolicy& pi_win, const PositionalPolicy& pi_tr,
                                const std::vector<bool>& winning);

/// V(x) = E[sum gamma_r^n Risk] on W under `pi`, by a sparse direct solve;
/// NaN outside W. Throws PolicyLeavesW when pi picks an action outside A_phi
/// or the model's support leaves W.
std::vector<double> evaluate_policy_risk(const RiskModel& m, const PositionalPolicy& pi);

}  // namespace smdpsynth
