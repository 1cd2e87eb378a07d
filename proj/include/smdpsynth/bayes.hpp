#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "smdpsynth/smdp.hpp"

namespace smdpsynth {

/// One observed step (s, a, s', tau) of the product, with the SMDP
/// components kept alongside for estimation.
struct Observation {
  StateId x;       ///< product state
  ActionId a;
  StateId x_next;  ///< product successor
  StateId s;       ///< SMDP state of x
  StateId s_next;  ///< SMDP state of x_next
  double tau;
};

/// Observed data O, kept as per-pair sufficient statistics so that the data
/// of a product pair can be dropped at once. Also maintains the SMDP-level
/// statistics of the retained data.
class ObservationStore {
 public:
  /// Retained data of one product pair for one product successor.
  struct Entry {
    StateId x_next;
    StateId s_next;
    double count;
    double tau_sum;
  };

  ObservationStore(std::size_t product_states, std::size_t num_actions, std::size_t base_states);

  void append(const Observation& o);
  /// Drops every tuple recorded for product pair (x, a).
  void remove_pair(StateId x, ActionId a);
  /// Number of retained tuples.
  std::size_t size() const noexcept { return size_; }
  std::size_t pair_size(StateId x, ActionId a) const { return pair_count_.at(x * num_actions_ + a); }
  std::span<const Entry> pair_entries(StateId x, ActionId a) const { return by_pair_.at(x * num_actions_ + a); }

  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t base_states() const noexcept { return base_states_; }

  /// SMDP-level statistics of retained tuples for (s, a): per observed successor
  /// the count and the dwell-time sum.
  struct Stats {
    std::vector<StateId> successors;  // ascending
    std::vector<double> count;
    std::vector<double> tau_sum;
  };
  const Stats& stats(StateId s, ActionId a) const { return stats_.at(s * num_actions_ + a); }

 private:
  void account(StateId s, ActionId a, StateId s_next, double count, double tau_sum);

  std::size_t num_actions_;
  std::size_t base_states_;
  std::size_t size_ = 0;
  std::vector<std::vector<Entry>> by_pair_;
  std::vector<std::size_t> pair_count_;
  std::vector<StateId> pair_base_;
  std::vector<Stats> stats_;
};

struct Priors {
  double dirichlet = 1.0;   ///< concentration per candidate successor
  double gamma_shape = 2.0;
  double gamma_rate = 1.0;
};

/// Lomax law: posterior predictive of an exponential dwell time under a
/// Gamma(shape, rate) posterior on its rate. Survival (1 + t/scale)^-shape.
struct LomaxPredictive {
  double shape;
  double scale;

  double mean() const;      ///< MomentUndefined unless shape > 1
  double variance() const;  ///< MomentUndefined unless shape > 2
  double survival(double t) const;
  double quantile(double alpha) const;
};

struct RiskFunctional {
  enum class Kind { Quantile, MeanPlusSigma };
  Kind kind = Kind::MeanPlusSigma;
  double param = 1.0;

  static RiskFunctional quantile(double alpha);
  static RiskFunctional mean_plus_sigma(double lambda);
};

/// f(d) for a known dwell law: the survival quantile inf{t | P(tau > t) < alpha}
/// or mean + lambda * standard deviation.
double risk_of(const DwellDistribution& d, const RiskFunctional& f);
double risk_of(const LomaxPredictive& d, const RiskFunctional& f);

/// Differential entropy of Dirichlet(alpha); 0 for a single component.
double dirichlet_entropy(std::span<const double> alpha);
/// Differential entropy of Gamma(shape, rate).
double gamma_entropy(double shape, double rate);

/// Conjugate posteriors: Dirichlet over the candidate successors of each SMDP
/// pair (s, a) and Gamma over the exponential rate of each triple (s, a, s').
class PosteriorStore {
 public:
  PosteriorStore(std::size_t base_states, std::size_t num_actions, Priors priors = {});

  /// Posterior from the retained tuples of `store`.
  static PosteriorStore from_store(const ObservationStore& store, Priors priors = {});
  /// Posterior from the tuples whose product pair is flagged in `pairs`
  /// (indexed x * |A| + a); all tuples when `pairs` is empty.
  static PosteriorStore from_observations(std::span<const Observation> obs, std::size_t base_states,
                                          std::size_t num_actions, const std::vector<bool>& pairs = {},
                                          Priors priors = {});

  /// Adds candidate successors that keep prior mass even without data.
  void declare_support(StateId s, ActionId a, std::span<const StateId> successors);
  /// Sequential conjugate update with one observed transition.
  void observe(StateId s, ActionId a, StateId next, double tau);

  bool tracked(StateId s, ActionId a) const;
  bool tracked(StateId s, ActionId a, StateId next) const;
  /// Candidate successors of (s, a), ascending.
  std::span<const StateId> support(StateId s, ActionId a) const;
  std::span<const double> concentration(StateId s, ActionId a) const;
  std::pair<double, double> gamma(StateId s, ActionId a, StateId next) const;
  /// Number of observed transitions of (s, a).
  double observations(StateId s, ActionId a) const;
  std::size_t observed_successors(StateId s, ActionId a) const;

  /// Dirichlet mean over support(s, a). Throws UntrackedPair.
  std::vector<double> predictive_transition(StateId s, ActionId a) const;
  double predictive_transition(StateId s, ActionId a, StateId next) const;
  /// Throws UntrackedTriple.
  LomaxPredictive predictive_dwell(StateId s, ActionId a, StateId next) const;
  double transition_entropy(StateId s, ActionId a) const;
  double dwell_entropy(StateId s, ActionId a, StateId next) const;

  const Priors& priors() const noexcept { return priors_; }
  std::size_t base_states() const noexcept { return base_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }

  nlohmann::ordered_json to_json() const;
  static PosteriorStore from_json(const nlohmann::json& doc);

 private:
  struct Entry {
    std::vector<StateId> support;
    std::vector<double> concentration;
    std::vector<double> shape;
    std::vector<double> rate;
    std::vector<bool> observed;
    double total = 0.0;  // observed transitions
  };
  Entry& entry(StateId s, ActionId a);
  const Entry& entry(StateId s, ActionId a) const;
  std::size_t slot(Entry& e, StateId next);
  long find(const Entry& e, StateId next) const;

  std::size_t base_states_;
  std::size_t num_actions_;
  Priors priors_;
  std::vector<Entry> entries_;
};

}  // namespace smdpsynth
