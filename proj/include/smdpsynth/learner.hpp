#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "smdpsynth/bayes.hpp"
#include "smdpsynth/product.hpp"

namespace smdpsynth {

struct LearnerConfig {
  double alpha = 0.2;                   ///< constant learning rate in (0, 1]
  std::size_t posterior_period = 1;     ///< recompute posteriors every this many episodes
  std::size_t episode_budget = 12000;
  std::size_t step_cap = 4000;          ///< steps per episode
  double temperature = 1.0;             ///< softmax temperature of the exploration policies
  double epsilon = 0.05;                ///< uniform mixing weight over allowed actions
  std::size_t patience = 500;           ///< quiet episodes required for convergence
  std::size_t min_tries = 10;           ///< tries per winning pair required for convergence
  std::size_t min_observations = 0;     ///< retained observations required for convergence
  std::uint64_t seed = 0;
  Priors priors;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// One application of the update rule, clamped to [-1, 0]:
/// (1 - alpha) q + alpha (r + max_next).
double q_update(double q, double r, double max_next, double alpha);

/// Softmax of score / temperature over the allowed actions, mixed with
/// epsilon-uniform over the same actions. Disallowed entries are 0. Actions
/// with score +inf share the softmax mass equally. Throws NoAllowedAction.
std::vector<double> softmax_policy(std::span<const double> scores, const std::vector<bool>& allowed, double temperature,
                                   double epsilon);

/// H[Dir] + (1/n) sum over successors of H[Gamma], n the number of observed
/// successors (at least 1). +inf for a pair without data.
double entropy_score(const PosteriorStore& post, StateId s, ActionId a);

/// Predictive probability that (x, a) leaves W in the product. 1 for a pair
/// without data.
double out_mass(const ProductSmdp& p, const PosteriorStore& post, const WinningRegion& w, StateId x, ActionId a);

/// Allowed actions of x: those with (x, a) in W_p.
std::vector<bool> allowed_actions(const WinningRegion& w, StateId x);

std::vector<double> pi_ent(const ProductSmdp& p, const PosteriorStore& post, const WinningRegion& w, StateId x,
                           double temperature, double epsilon);
std::vector<double> pi_wperp(const ProductSmdp& p, const PosteriorStore& post, const WinningRegion& w, StateId x,
                             double temperature, double epsilon);
/// pi_wperp on boundary states, pi_ent elsewhere in W.
std::vector<double> pi_ex(const ProductSmdp& p, const PosteriorStore& post, const WinningRegion& w,
                          const std::vector<bool>& boundary, StateId x, double temperature, double epsilon);

/// Known product successors per pair, indexed x * |A| + a.
using SuccessorSupport = std::vector<std::vector<StateId>>;

/// States of W with a pair in W_p that has a supported successor outside W.
std::vector<bool> boundary(const WinningRegion& w, const SuccessorSupport& support);

/// Winning states and pairs read off a Q table: Q(x, a) = 0 on an enabled pair.
WinningRegion region_from_q(const ProductSmdp& p, std::span<const double> q);

/// |W_p| / |W_p^k|. Throws DivisionByZero when the estimate is empty.
double ind_k(const WinningRegion& oracle, const WinningRegion& estimate);

struct EpisodeRecord {
  std::size_t k;
  std::size_t w_states;
  std::size_t w_pairs;
  std::size_t boundary;
  double ind;  ///< NaN without an oracle
  std::size_t length;
  bool exited;
  double wall_seconds;
};

void write_progress_csv(std::ostream& out, std::span<const EpisodeRecord> rows);

/// Winning-region learner over a product used only as a simulator:
/// transitions are sampled, never read.
class WinningLearner {
 public:
  /// Q = -1 on accepting states, 0 elsewhere. Throws EmptyWinningCandidate.
  WinningLearner(const ProductSmdp& p, LearnerConfig cfg);

  /// Explores from the current start state until leaving W or hitting the
  /// step cap, applies the update, prunes the data and picks the next start.
  EpisodeRecord run_episode();
  bool converged() const;

  std::span<const double> q() const { return q_; }
  const WinningRegion& region() const { return region_; }
  const std::vector<bool>& boundary_states() const { return boundary_; }
  const PosteriorStore& posterior() const { return posterior_; }
  const ObservationStore& observations() const { return store_; }
  const SuccessorSupport& support() const { return support_; }
  std::size_t episode() const { return k_; }
  std::size_t steps() const { return steps_; }
  StateId start_state() const { return start_; }
  /// Times W^{k+1} or W_p^{k+1} was not contained in its predecessor.
  std::size_t monotonicity_violations() const { return violations_; }

  /// Exploration distribution at x under the current estimates.
  std::vector<double> exploration(StateId x) const;

 private:
  void refresh_posterior();
  void refresh_boundary();
  void choose_start();
  void update(StateId x, ActionId a, StateId next);

  const ProductSmdp& p_;
  LearnerConfig cfg_;
  Rng rng_;
  std::vector<double> q_;
  WinningRegion region_;
  std::vector<bool> boundary_;
  ObservationStore store_;
  PosteriorStore posterior_;
  SuccessorSupport support_;
  std::vector<double> ent_score_;  // per SMDP pair, refreshed with the posterior
  std::vector<std::size_t> tries_;
  std::size_t k_ = 0;
  std::size_t steps_ = 0;
  std::size_t quiet_ = 0;
  std::size_t violations_ = 0;
  StateId start_ = 0;
};

struct LearnerResult {
  WinningRegion region;
  PosteriorStore posterior;
  ObservationStore observations;
  SuccessorSupport support;
  std::vector<EpisodeRecord> progress;
  bool converged = false;  ///< false when the episode budget ran out first
  std::size_t episodes = 0;
  std::size_t steps = 0;
  std::size_t violations = 0;
};

/// Runs episodes until convergence or the budget. With an oracle the
/// progress rows carry Ind^k.
LearnerResult learn_winning_region(const ProductSmdp& p, const LearnerConfig& cfg, const WinningRegion* oracle = nullptr);

}  // namespace smdpsynth
