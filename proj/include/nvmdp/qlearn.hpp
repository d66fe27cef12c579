#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nvmdp/model.hpp"

namespace nvmdp {

/**
 * How a learner turns its bank of value estimates at the next state into
 * one bootstrap number. A bank has n tracks; each track keeps its current
 * estimate plus l - 1 older snapshots of itself (a length-l history, index
 * 0 newest). On every update one track is chosen uniformly at random, its
 * history shifts back by one slot, and only its newest slot moves. The
 * bootstrap for that update is computed by the selector "through the eyes"
 * of the chosen track.
 *
 *   max_of_first       max_a of the single estimate; requires n = l = 1.
 *                      This is the plain time-indexed learner.
 *   averaged           max_a of the mean over every (track, history) slot.
 *   maxmin             max_a of the min over every slot. The most
 *                      pessimistic member of the bank gates each action.
 *   wtavg              per track: blend a geometrically weighted history
 *                      average of the chosen track (weight eta) with the
 *                      mean of the other tracks' weighted averages
 *                      (weight 1 - eta). History weights fall off by a
 *                      factor lambda per step back and are normalized.
 *   ptmxm              per track: max_a of the min over the track's own
 *                      history only. Pessimism against the track's recent
 *                      past, independent across tracks.
 *   broken_double_max  2 * max over every slot. Deliberately violates the
 *                      non-expansiveness requirement; exists so tests can
 *                      show the assumption checker catches a bad selector.
 *
 * Every selector except the broken one preserves constants and is
 * non-expansive in the sup norm, the two properties the convergence
 * argument needs from the bootstrap.
 */
enum class SelectorKind {
  max_of_first,
  averaged,
  maxmin,
  wtavg,
  ptmxm,
  broken_double_max,
};

std::string to_string(SelectorKind kind);

struct Selector {
  SelectorKind kind = SelectorKind::max_of_first;
  int n = 1;            // tracks
  int l = 1;            // history length per track
  double lambda = 0.5;  // wtavg history decay
  double eta = 0.7;     // wtavg own-track weight

  /// Shape and parameter checks; raises ValidationError on bad input.
  void validate() const;

  /// Normalized history weights, newest first: lambda^j scaled to sum 1.
  std::vector<double> history_weights() const;
};

/**
 * Value estimates indexed [t][s][a][track][history slot], t = 0..horizon,
 * zero initialized. The t = horizon slice stays zero for the life of the
 * tensor; learning only ever writes t < horizon and bootstraps through
 * discounts that vanish at the horizon.
 */
class EstimateTensor {
 public:
  EstimateTensor(int horizon, int num_states, int num_actions, int tracks,
                 int history);

  double at(int t, int s, int a, int i, int j) const { return data_[idx(t, s, a, i, j)]; }
  double& at(int t, int s, int a, int i, int j) { return data_[idx(t, s, a, i, j)]; }

  /// Contiguous [a][track][slot] block for one (t, s).
  const double* slice(int t, int s) const { return &data_[idx(t, s, 0, 0, 0)]; }

  /// Moves track i's history back one slot at (t, s, a); slot 0 keeps its
  /// value (the caller overwrites it with the fresh update).
  void shift_history(int t, int s, int a, int i);

  int horizon() const { return H_; }
  int num_states() const { return S_; }
  int num_actions() const { return A_; }
  int tracks() const { return n_; }
  int history() const { return l_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  size_t idx(int t, int s, int a, int i, int j) const {
    return ((((static_cast<size_t>(t) * S_ + s) * A_ + a) * n_ + i) * l_) + j;
  }
  int H_, S_, A_, n_, l_;
  std::vector<double> data_;
};

/**
 * Bootstrap value for one track: the selector applied at a next-state
 * slice, as seen by the given track. q points at an [a][track][slot]
 * block (layout of EstimateTensor::slice).
 */
double selector_apply(const Selector& sel, const double* q, int num_actions,
                      int track);

/**
 * Per-action behavior scores at a slice: each action's selector aggregate
 * averaged over the track it would be seen through. Used for action choice
 * (greedy and epsilon-greedy) so behavior matches what the bank as a whole
 * believes. scores must hold num_actions entries.
 */
void selector_action_scores(const Selector& sel, const double* q, int num_actions,
                            double* scores);

struct LearningConfig {
  double epsilon = 0.05;  // exploration rate of the behavior policy
  double alpha = 0.1;     // constant stepsize (ignored when tapering)
  bool tapering = false;  // 1 / visit-count stepsizes, counts per (t, s, a)
  long episodes = 50000;
  long eval_every = 500;       // greedy evaluation cadence, in episodes
  std::uint64_t seed = 0;      // per-run seed; behavior and eval streams derive from it
  int convergence_steps = 12;  // greedy rollout must end at a terminal in exactly this many steps
  double classic_gamma = 0.999;     // fixed discount for the classic baseline
  std::vector<int> watched_states;  // states flagged in the final trajectory report
};

/**
 * Everything recorded about one training run. The convergence episode is
 * retrospective: the earliest evaluation from which every later evaluation
 * (including itself) reached a terminal state in exactly convergence_steps
 * steps. steps counts environment steps of training episodes only;
 * evaluation rollouts draw from a separate stream and are not counted.
 * pre_convergence_return_std is the sample standard deviation of greedy
 * evaluation returns strictly before the convergence point (all of them if
 * the run never converged; zero if fewer than two such returns exist).
 */
struct RunRecord {
  std::string algorithm;
  int n = 1;
  int l = 1;
  std::string reward_scheme;
  std::string discount_scheme;
  std::uint64_t seed = 0;
  bool converged = false;
  long convergence_episode = -1;
  long steps = 0;
  double pre_convergence_return_std = 0.0;
  std::vector<int> final_trajectory;  // states of the final greedy rollout
  bool avoidance_hit = false;         // final trajectory visited a watched state
  std::string noise_method;           // "none" or "inverse-cdf"

  // Evaluation curve, kept for plot emission; not part of the record's
  // serialized form.
  std::vector<long> eval_episodes;
  std::vector<double> eval_returns;
  std::vector<int> eval_steps;
};

struct EpisodeStats {
  long steps = 0;
};

/**
 * One behavior episode with online updates. Per episode the stream is
 * consumed in a fixed order: one start draw, then per step one uniform for
 * the explore/exploit coin (plus one for the action when exploring), one
 * for the transition, the reward scheme's draws, and one for the track
 * choice (always consumed, even with one track). Ties in greedy choices go
 * to the lowest action index.
 *
 * visit_counts is the per-(t, s, a) update counter used for tapering
 * stepsizes; it is shared by all tracks and may be null when cfg.tapering
 * is false.
 */
void run_episode(const TabularNvmdp& model, const Selector& sel,
                 const LearningConfig& cfg, EstimateTensor& q, Rng& rng,
                 std::vector<long>* visit_counts, EpisodeStats& stats);

/**
 * Full training run for a time-indexed learner with the given selector.
 * Fills the learning outcome fields of the RunRecord (algorithm and scheme
 * labels are the caller's to set). Deterministic in cfg.seed.
 */
RunRecord train(const TabularNvmdp& model, const Selector& sel,
                const LearningConfig& cfg);

/**
 * The fixed-discount baseline: one time-independent table, greedy behavior
 * over it, updates with the constant discount cfg.classic_gamma. Everything
 * else (protocol, evaluation, record fields) matches train. Because its
 * table cannot condition on the epoch, it cannot represent time-dependent
 * play; on the windy benchmark that locks it out of the optimal route.
 */
RunRecord classic_q_baseline(const TabularNvmdp& model, const LearningConfig& cfg);

/**
 * Property check for the two selector assumptions: constants in, same
 * constant out; and sup-norm non-expansiveness between paired random
 * slices. Runs `pairs` random trials per property, deterministic in seed.
 */
struct SelectorSuiteReport {
  bool constant_ok = true;
  bool nonexpansive_ok = true;
  double worst_constant_dev = 0.0;
  double worst_excess = 0.0;  // max of |f(q) - f(q')| - max|q - q'|
  long pairs = 0;
  std::string witness;  // description of the first violation found
  bool pass() const { return constant_ok && nonexpansive_ok; }
};
SelectorSuiteReport selector_assumption_suite(const Selector& sel, long pairs,
                                              std::uint64_t seed);

}  // namespace nvmdp
