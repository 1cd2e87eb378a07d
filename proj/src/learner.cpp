#include "smdpsynth/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "smdpsynth/errors.hpp"

namespace smdpsynth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSupportThreshold = 1e-6;

ActionId sample_action(const std::vector<double>& dist, Rng& rng) {
  double u = uniform01(rng);
  ActionId last = 0;
  for (ActionId a = 0; a < dist.size(); ++a) {
    if (dist[a] <= 0.0) continue;
    last = a;
    if (u < dist[a]) return a;
    u -= dist[a];
  }
  return last;
}

void add_unique(std::vector<StateId>& v, StateId x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

void LearnerConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("learning rate must lie in (0, 1]");
  if (posterior_period < 1) throw ConfigError("posterior period must be at least 1");
  if (episode_budget < 1) throw ConfigError("episode budget must be at least 1");
  if (step_cap < 1) throw ConfigError("step cap must be at least 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (!(priors.dirichlet > 0.0 && priors.gamma_shape > 0.0 && priors.gamma_rate > 0.0))
    throw ConfigError("prior parameters must be positive");
}

double q_update(double q, double r, double max_next, double alpha) {
  return std::clamp((1.0 - alpha) * q + alpha * (r + max_next), -1.0, 0.0);
}

std::vector<double> softmax_policy(std::span<const double> scores, const std::vector<bool>& allowed, double temperature,
                                   double epsilon) {
  const std::size_t n = scores.size();
  std::size_t count = 0;
  bool any_inf = false;
  double top = -kInf;
  for (std::size_t a = 0; a < n; ++a) {
    if (!allowed[a]) continue;
    ++count;
    any_inf = any_inf || scores[a] == kInf;
    top = std::max(top, scores[a]);
  }
  if (count == 0) throw NoAllowedAction("no allowed action");
  std::vector<double> w(n, 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    if (!allowed[a]) continue;
    w[a] = any_inf ? (scores[a] == kInf ? 1.0 : 0.0) : std::exp((scores[a] - top) / temperature);
    total += w[a];
  }
  for (std::size_t a = 0; a < n; ++a)
    if (allowed[a]) w[a] = (1.0 - epsilon) * w[a] / total + epsilon / static_cast<double>(count);
  return w;
}

double entropy_score(const PosteriorStore& post, StateId s, ActionId a) {
  if (!post.tracked(s, a)) return kInf;
  double dwell = 0.0;
  for (StateId y : post.support(s, a)) {
    const auto [shape, rate] = post.gamma(s, a, y);
    dwell += gamma_entropy(shape, rate);
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, post.observed_successors(s, a)));
  return dirichlet_entropy(post.concentration(s, a)) + dwell / n;
}

double out_mass(const ProductSmdp& p, const PosteriorStore& post, const WinningRegion& w, StateId x, ActionId a) {
  const StateId s = p.state(x).s;
  if (!post.tracked(s, a)) return 1.0;
  const auto support = post.support(s, a);
  const auto pred = post.predictive_transition(s, a);
  double mass = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto next = p.successor(x, support[i]);
    if (!next || !w.contains(*next)) mass += pred[i];
  }
  return mass;
}

std::vector<bool> allowed_actions(const WinningRegion& w, StateId x) {
  std::vector<bool> out(w.num_actions);
  for (ActionId a = 0; a < w.num_actions; ++a) out[a] = w.contains(x, a);
  return out;
}

std::vector<double> pi_ent(const ProductSmdp& p, const PosteriorStore& post, const WinningRegion& w, StateId x,
                           double temperature, double epsilon) {
  const auto allowed = allowed_actions(w, x);
  std::vector<double> scores(w.num_actions, 0.0);
  for (ActionId a = 0; a < w.num_actions; ++a)
    if (allowed[a]) scores[a] = entropy_score(post, p.state(x).s, a);
  return softmax_policy(scores, allowed, temperature, epsilon);
}

std::vector<double> pi_wperp(const ProductSmdp& p, const PosteriorStore& post, const WinningRegion& w, StateId x,
                             double temperature, double epsilon) {
  const auto allowed = allowed_actions(w, x);
  std::vector<double> scores(w.num_actions, 0.0);
  for (ActionId a = 0; a < w.num_actions; ++a)
    if (allowed[a]) scores[a] = out_mass(p, post, w, x, a);
  return softmax_policy(scores, allowed, temperature, epsilon);
}

std::vector<double> pi_ex(const ProductSmdp& p, const PosteriorStore& post, const WinningRegion& w,
                          const std::vector<bool>& boundary, StateId x, double temperature, double epsilon) {
  return boundary.at(x) ? pi_wperp(p, post, w, x, temperature, epsilon) : pi_ent(p, post, w, x, temperature, epsilon);
}

std::vector<bool> boundary(const WinningRegion& w, const SuccessorSupport& support) {
  std::vector<bool> out(w.states.size(), false);
  for (StateId x = 0; x < w.states.size(); ++x) {
    if (!w.states[x]) continue;
    for (ActionId a = 0; a < w.num_actions && !out[x]; ++a) {
      if (!w.contains(x, a)) continue;
      for (StateId y : support.at(x * w.num_actions + a))
        if (!w.contains(y)) {
          out[x] = true;
          break;
        }
    }
  }
  return out;
}

WinningRegion region_from_q(const ProductSmdp& p, std::span<const double> q) {
  const std::size_t na = p.num_actions();
  WinningRegion w{std::vector<bool>(p.num_states(), false), std::vector<bool>(p.num_states() * na, false), na};
  for (StateId x = 0; x < p.num_states(); ++x)
    for (ActionId a : p.enabled_actions(x))
      if (q[x * na + a] == 0.0) {
        w.pairs[x * na + a] = true;
        w.states[x] = true;
      }
  return w;
}

double ind_k(const WinningRegion& oracle, const WinningRegion& estimate) {
  const std::size_t est = estimate.num_pairs();
  if (est == 0) throw DivisionByZero("estimated winning pairs are empty");
  return static_cast<double>(oracle.num_pairs()) / static_cast<double>(est);
}

void write_progress_csv(std::ostream& out, std::span<const EpisodeRecord> rows) {
  out << "k,w_states,w_pairs,boundary,ind,length,exited,wall_seconds\n";
  for (const auto& r : rows) {
    out << r.k << ',' << r.w_states << ',' << r.w_pairs << ',' << r.boundary << ',';
    if (!std::isnan(r.ind)) out << r.ind;
    out << ',' << r.length << ',' << (r.exited ? 1 : 0) << ',' << r.wall_seconds << '\n';
  }
}

WinningLearner::WinningLearner(const ProductSmdp& p, LearnerConfig cfg)
    : p_(p),
      cfg_(cfg),
      rng_(make_stream(cfg.seed, 0)),
      q_(p.num_states() * p.num_actions(), -1.0),
      store_(p.num_states(), p.num_actions(), p.base().num_states()),
      posterior_(p.base().num_states(), p.num_actions(), cfg.priors),
      support_(p.num_states() * p.num_actions()),
      tries_(p.num_states() * p.num_actions(), 0) {
  cfg_.validate();
  const std::size_t na = p.num_actions();
  for (StateId x = 0; x < p.num_states(); ++x)
    if (!p.is_accepting(x))
      for (ActionId a : p.enabled_actions(x)) q_[x * na + a] = 0.0;
  region_ = region_from_q(p, q_);
  if (region_.num_states() == 0) throw EmptyWinningCandidate("every product state is accepting");
  refresh_posterior();
  refresh_boundary();
  const auto states = region_.state_list();
  start_ = states[std::uniform_int_distribution<std::size_t>(0, states.size() - 1)(rng_)];
}

std::vector<double> WinningLearner::exploration(StateId x) const {
  if (!region_.contains(x)) throw NoAllowedAction("state outside the estimated winning region");
  if (boundary_[x]) return pi_wperp(p_, posterior_, region_, x, cfg_.temperature, cfg_.epsilon);
  const auto allowed = allowed_actions(region_, x);
  const StateId s = p_.state(x).s;
  const std::span<const double> scores(ent_score_.data() + s * p_.num_actions(), p_.num_actions());
  return softmax_policy(scores, allowed, cfg_.temperature, cfg_.epsilon);
}

void WinningLearner::refresh_posterior() {
  posterior_ = PosteriorStore::from_store(store_, cfg_.priors);
  const std::size_t na = p_.num_actions();
  ent_score_.assign(p_.base().num_states() * na, kInf);
  for (StateId s = 0; s < p_.base().num_states(); ++s)
    for (ActionId a = 0; a < na; ++a) ent_score_[s * na + a] = entropy_score(posterior_, s, a);
  // Successors the predictive law supports join the known support of every
  // winning pair sharing the SMDP pair.
  for (StateId x = 0; x < p_.num_states(); ++x) {
    if (!region_.contains(x)) continue;
    const StateId s = p_.state(x).s;
    for (ActionId a = 0; a < na; ++a) {
      if (!region_.contains(x, a) || !posterior_.tracked(s, a)) continue;
      const auto succ = posterior_.support(s, a);
      const auto pred = posterior_.predictive_transition(s, a);
      for (std::size_t i = 0; i < succ.size(); ++i) {
        if (pred[i] <= kSupportThreshold) continue;
        if (const auto y = p_.successor(x, succ[i])) add_unique(support_[x * na + a], *y);
      }
    }
  }
}

void WinningLearner::refresh_boundary() { boundary_ = boundary(region_, support_); }

void WinningLearner::choose_start() {
  if (region_.num_states() == 0) return;
  std::vector<StateId> pool;
  for (StateId x = 0; x < p_.num_states(); ++x)
    if (boundary_[x]) pool.push_back(x);
  if (pool.empty()) {
    const std::size_t na = p_.num_actions();
    for (StateId x = 0; x < p_.num_states(); ++x) {
      if (!region_.contains(x)) continue;
      for (ActionId a = 0; a < na; ++a)
        if (region_.contains(x, a) && tries_[x * na + a] < cfg_.min_tries) {
          pool.push_back(x);
          break;
        }
    }
  }
  if (pool.empty()) pool = region_.state_list();
  start_ = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng_)];
}

void WinningLearner::update(StateId x, ActionId a, StateId next) {
  const std::size_t na = p_.num_actions();
  const double r = p_.is_accepting(next) ? -1.0 : 0.0;
  double best = -1.0;
  for (ActionId b : p_.enabled_actions(next)) best = std::max(best, q_[next * na + b]);
  q_[x * na + a] = q_update(q_[x * na + a], r, best, cfg_.alpha);
  WinningRegion next_region = region_from_q(p_, q_);
  for (StateId y = 0; y < p_.num_states(); ++y) {
    if (next_region.states[y] && !region_.states[y]) ++violations_;
    for (ActionId b = 0; b < na; ++b) {
      const std::size_t i = y * na + b;
      if (next_region.pairs[i] && !region_.pairs[i]) ++violations_;
      if (region_.pairs[i] && !next_region.pairs[i]) store_.remove_pair(y, b);
    }
  }
  region_ = std::move(next_region);
}

EpisodeRecord WinningLearner::run_episode() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t na = p_.num_actions();
  EpisodeRecord rec{};
  rec.k = k_;
  if (region_.num_states() > 0) {
    StateId x = start_;
    while (rec.length < cfg_.step_cap) {
      const ActionId a = sample_action(exploration(x), rng_);
      const Step step = p_.sample_step(x, a, rng_);
      ++rec.length;
      ++steps_;
      store_.append({x, a, step.next, p_.state(x).s, p_.state(step.next).s, step.tau});
      ++tries_[x * na + a];
      add_unique(support_[x * na + a], step.next);
      if (!region_.contains(step.next)) {
        update(x, a, step.next);
        rec.exited = true;
        break;
      }
      x = step.next;
    }
  }
  ++k_;
  quiet_ = rec.exited ? 0 : quiet_ + 1;
  if (k_ % cfg_.posterior_period == 0) refresh_posterior();
  refresh_boundary();
  choose_start();
  rec.w_states = region_.num_states();
  rec.w_pairs = region_.num_pairs();
  rec.boundary = static_cast<std::size_t>(std::count(boundary_.begin(), boundary_.end(), true));
  rec.ind = std::numeric_limits<double>::quiet_NaN();
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

bool WinningLearner::converged() const {
  if (region_.num_states() == 0) return true;
  if (quiet_ < cfg_.patience) return false;
  if (store_.size() < cfg_.min_observations) return false;
  if (std::find(boundary_.begin(), boundary_.end(), true) != boundary_.end()) return false;
  for (std::size_t i = 0; i < region_.pairs.size(); ++i)
    if (region_.pairs[i] && tries_[i] < cfg_.min_tries) return false;
  return true;
}

LearnerResult learn_winning_region(const ProductSmdp& p, const LearnerConfig& cfg, const WinningRegion* oracle) {
  WinningLearner learner(p, cfg);
  std::vector<EpisodeRecord> progress;
  while (!learner.converged() && learner.episode() < cfg.episode_budget) {
    auto rec = learner.run_episode();
    if (oracle && rec.w_pairs > 0) rec.ind = ind_k(*oracle, learner.region());
    progress.push_back(rec);
  }
  return LearnerResult{learner.region(),        learner.posterior(), learner.observations(), learner.support(),
                       std::move(progress),     learner.converged(), learner.episode(),      learner.steps(),
                       learner.monotonicity_violations()};
}

}  // namespace smdpsynth
