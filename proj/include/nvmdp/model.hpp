#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nvmdp/errors.hpp"
#include "nvmdp/rng.hpp"

namespace nvmdp {

/**
 * One step of a trajectory: the state the agent was in, the action it took,
 * the state it landed in, and the reward observed on that transition.
 */
struct TrajectoryStep {
  int s = 0;
  int a = 0;
  int s_next = 0;
  double reward = 0.0;
};

/// Signature for an optional stochastic reward: (t, s, a, s', rng) -> sample.
using RewardSampler = std::function<double(int, int, int, int, Rng&)>;

/**
 * Definition of a finite-horizon decision process with non-stationary
 * dynamics and a transition-dependent discount factor. This is the
 * constructor input for TabularNvmdp; callbacks are evaluated once per
 * (t, s, a, s') cell during materialization and never stored.
 *
 * Conventions:
 *  - transition(t, s, a) returns the distribution over successor states at
 *    decision epoch t, as a dense vector of length num_states.
 *  - mean_reward(t, s, a, s') is the expected reward for that transition.
 *    Its magnitude must not exceed reward_bound.
 *  - discount(t + 1, s, a, s') is the factor applied to value carried back
 *    from epoch t + 1 across the transition taken at epoch t. It must be
 *    nonnegative; values above 1 are allowed (a transient "boost").
 *  - reward_sampler, when set, draws the observed reward; its mean should
 *    match mean_reward. When unset, rewards are deterministic.
 */
struct NvmdpDef {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  double reward_bound = 0.0;
  std::function<std::vector<double>(int, int, int)> transition;
  std::function<double(int, int, int, int)> mean_reward;
  std::function<double(int, int, int, int)> discount;
  RewardSampler reward_sampler;  // optional
  std::vector<double> start_states;  // distribution over states, length num_states
  std::vector<int> terminal_states;  // absorbing states
};

/**
 * Dense, immutable tabular model. The constructor materializes the
 * definition into flat arrays, validates it, and applies the finite-horizon
 * embedding:
 *
 *  - every transition probability row must sum to 1 within 1e-12 (rows are
 *    renormalized exactly after the check, so downstream code can rely on
 *    sums of exactly 1);
 *  - discounts must be nonnegative and rewards bounded by reward_bound;
 *  - the discount applied past the final decision epoch is forced to 0, so
 *    no value flows back from beyond the horizon;
 *  - terminal states are absorbing: they self-loop with probability 1,
 *    yield no reward from themselves, and the discount on any transition
 *    into them is 0 (a trajectory's return is complete once it enters one).
 *
 * Violations raise ValidationError with the offending (t, s, a) named.
 */
class TabularNvmdp {
 public:
  explicit TabularNvmdp(const NvmdpDef& def);

  int num_states() const { return S_; }
  int num_actions() const { return A_; }
  int horizon() const { return H_; }
  double reward_bound() const { return rb_; }

  /// P_t(s' | s, a). Zero-filled self-loop semantics apply for t >= horizon.
  double transition(int t, int s, int a, int s_next) const {
    return t >= H_ ? (s == s_next ? 1.0 : 0.0) : trans_[tidx(t, s, a, s_next)];
  }

  /// Pointer to the length-num_states probability row for (t, s, a), t < horizon.
  const double* transition_row(int t, int s, int a) const {
    return &trans_[tidx(t, s, a, 0)];
  }

  /// Expected reward on (t, s, a, s'). Zero at or past the horizon.
  double mean_reward(int t, int s, int a, int s_next) const {
    return t >= H_ ? 0.0 : mrew_[tidx(t, s, a, s_next)];
  }

  /**
   * gamma_{t1}(s, a, s'), the factor discounting value carried from epoch
   * t1 = t + 1 back across the transition (s, a, s') taken at epoch t.
   * Zero for t1 >= horizon (the embedding) and for transitions into
   * terminal states. t1 must be at least 1.
   */
  double discount(int t1, int s, int a, int s_next) const {
    if (t1 < 1) throw ValidationError("discount index t+1 must be >= 1");
    return t1 >= H_ ? 0.0 : disc_[tidx(t1 - 1, s, a, s_next)];
  }

  /// Observed reward; uses the sampler when present, the mean otherwise.
  double sample_reward(int t, int s, int a, int s_next, Rng& rng) const {
    if (t >= H_) return 0.0;
    if (sampler_) return sampler_(t, s, a, s_next, rng);
    return mrew_[tidx(t, s, a, s_next)];
  }

  bool has_reward_sampler() const { return static_cast<bool>(sampler_); }

  const std::vector<double>& start_distribution() const { return start_; }
  const std::vector<int>& terminal_states() const { return terminals_; }
  bool is_terminal(int s) const { return is_term_[static_cast<size_t>(s)] != 0; }

  /// max over (s, a, s') of gamma_{t1}(s, a, s'); zero for t1 >= horizon.
  double max_discount_at(int t1) const {
    if (t1 < 1) throw ValidationError("discount index t+1 must be >= 1");
    return t1 >= H_ ? 0.0 : maxdisc_[static_cast<size_t>(t1 - 1)];
  }

  /// Draws s_0 from the start distribution. Consumes one uniform.
  int sample_start(Rng& rng) const;

  /// Draws s' from P_t(. | s, a). Consumes one uniform.
  int sample_next(int t, int s, int a, Rng& rng) const;

  /// Bounds-checked index validation helpers used by the checked operations.
  void check_state(int s) const;
  void check_action(int a) const;
  void check_time(int t) const;

 private:
  size_t tidx(int t, int s, int a, int s_next) const {
    return ((static_cast<size_t>(t) * S_ + s) * A_ + a) * S_ + s_next;
  }

  int S_ = 0, A_ = 0, H_ = 0;
  double rb_ = 0.0;
  std::vector<double> trans_;    // [t][s][a][s'], t in 0..H-1
  std::vector<double> mrew_;     // same layout
  std::vector<double> disc_;     // entry at t holds gamma_{t+1}(s, a, s')
  std::vector<double> maxdisc_;  // per-epoch max of disc_
  std::vector<double> start_;
  std::vector<int> terminals_;
  std::vector<char> is_term_;
  RewardSampler sampler_;
};

/**
 * Time-indexed stochastic policy pi_t(a | s) for t = 0..horizon inclusive.
 * The row at t = horizon exists so value recursions can be written without
 * a special case; nothing that happens there can affect any return.
 * Rows must sum to 1 within 1e-12 and are renormalized exactly.
 */
class TimePolicy {
 public:
  /// probs is flattened [t][s][a] with t = 0..horizon inclusive.
  TimePolicy(int horizon, int num_states, int num_actions, std::vector<double> probs);

  static TimePolicy uniform(int horizon, int num_states, int num_actions);

  /// Deterministic policy from an action choice map (t, s) -> a.
  static TimePolicy deterministic(int horizon, int num_states, int num_actions,
                                  const std::function<int(int, int)>& act);

  double prob(int t, int s, int a) const { return probs_[pidx(t, s, a)]; }
  const double* row(int t, int s) const { return &probs_[pidx(t, s, 0)]; }

  int horizon() const { return H_; }
  int num_states() const { return S_; }
  int num_actions() const { return A_; }

  /// Most probable action, lowest index on ties.
  int greedy_action(int t, int s) const;

 private:
  size_t pidx(int t, int s, int a) const {
    return (static_cast<size_t>(t) * S_ + s) * A_ + a;
  }
  int H_, S_, A_;
  std::vector<double> probs_;
};

/**
 * State values indexed by (t, s) for t = 0..horizon inclusive. The row at
 * t = horizon is identically zero by construction (the embedding pins it)
 * and consumers treat it as read-only.
 */
struct ValueTable {
  ValueTable(int horizon, int num_states)
      : horizon(horizon), num_states(num_states),
        data(static_cast<size_t>(horizon + 1) * num_states, 0.0) {}

  double& at(int t, int s) { return data[static_cast<size_t>(t) * num_states + s]; }
  double at(int t, int s) const { return data[static_cast<size_t>(t) * num_states + s]; }

  int horizon;
  int num_states;
  std::vector<double> data;
};

/// Action values indexed by (t, s, a); same time convention as ValueTable.
struct QTable {
  QTable(int horizon, int num_states, int num_actions)
      : horizon(horizon), num_states(num_states), num_actions(num_actions),
        data(static_cast<size_t>(horizon + 1) * num_states * num_actions, 0.0) {}

  double& at(int t, int s, int a) {
    return data[(static_cast<size_t>(t) * num_states + s) * num_actions + a];
  }
  double at(int t, int s, int a) const {
    return data[(static_cast<size_t>(t) * num_states + s) * num_actions + a];
  }

  int horizon;
  int num_states;
  int num_actions;
  std::vector<double> data;
};

/**
 * Product of the discount factors accumulated along a trajectory suffix:
 * the factor that scales value at the trajectory's end back to epoch t.
 * An empty trajectory gives 1. Steps must chain (each s must equal the
 * previous step's s_next) or ValidationError is raised.
 */
double discount_product(const TabularNvmdp& model,
                        const std::vector<TrajectoryStep>& traj, int t);

/**
 * Realized return of a trajectory that starts at epoch t: the sum of each
 * step's observed reward scaled by the discount product accumulated up to
 * that step. The trajectory must fit inside the horizon (t + length <=
 * horizon) and chain correctly.
 */
double return_of_trajectory(const TabularNvmdp& model,
                            const std::vector<TrajectoryStep>& traj, int t);

/// Advantage q(t, s, a) - v(t, s), with index validation against the tables.
double advantage(const QTable& q, const ValueTable& v, int t, int s, int a);

/**
 * A uniform bound on the magnitude of any state or action value of the
 * model under any policy: reward_bound times the largest (over start epoch)
 * sum of per-step worst-case discount products out to the horizon. Computed
 * by the backward recursion S_t = 1 + max_gamma(t + 1) * S_{t+1} with
 * S_horizon = 0.
 */
double value_bound(const TabularNvmdp& model);

}  // namespace nvmdp
