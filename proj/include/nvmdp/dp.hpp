#pragma once

#include <string>
#include <vector>

#include "nvmdp/model.hpp"

namespace nvmdp {

/**
 * Output of a backward sweep. v and q cover t = 0..horizon with the horizon
 * rows pinned to zero. greedy is the deterministic policy that picks the
 * lowest-indexed maximizer of q at every (t, s); for value_iteration that is
 * an optimal policy, for policy_evaluation it is the one-step greedy
 * improvement of the evaluated policy.
 */
struct DpResult {
  ValueTable v;
  QTable q;
  TimePolicy greedy;
};

/**
 * Exact evaluation of a policy by one backward sweep: at each epoch the
 * action values are finished first from the already-computed next-epoch
 * state values, then the state value is the policy mix of that q row.
 * The policy must cover at least the model's horizon.
 */
DpResult policy_evaluation(const TabularNvmdp& model, const TimePolicy& policy);

/**
 * Optimal values by backward induction on the optimality recursion
 * q*(t, s, a) = sum_s' p (r + gamma_{t+1} max_a' q*(t+1, s', a')).
 * Ties in the argmax go to the lowest action index, so the returned greedy
 * policy is unique and runs are reproducible.
 */
DpResult value_iteration(const TabularNvmdp& model);

/**
 * Max-abs residual of the optimality recursion over all (t, s, a), plus the
 * magnitude of any nonzero entry in the q rows at t = horizon. Zero (up to
 * float noise) exactly when q is the optimal table.
 */
double bellman_residual(const TabularNvmdp& model, const QTable& q);

/**
 * Potential-based reward shaping: returns a new model identical to the
 * input except r~(t, s, a, s') = r + gamma_{t+1}(s, a, s') phi(t+1, s') -
 * phi(t, s). Optimal (and any policy's) action values shift by exactly
 * -phi(t, s), so argmaxes and optimal policies are preserved; complete
 * trajectory returns from (t, s) shift by -phi(t, s) as well.
 *
 * phi is flattened [t][s] for t = 0..horizon. It must be finite and zero on
 * terminal states (nothing is collected at a terminal, so a potential there
 * would break the shift identity). The row at t = horizon is ignored: it
 * only ever enters multiplied by the beyond-horizon discount, which is 0.
 * The shaped model's reward bound is recomputed from the shaped rewards,
 * and reward noise (when present) carries over unchanged around the new
 * means.
 */
TabularNvmdp reward_shaping_transform(const TabularNvmdp& model,
                                      const std::vector<double>& phi);

/**
 * Checks the policy improvement guarantee for a candidate pair: if pi2's
 * action mix is at least as good as pi1 under pi1's own q everywhere
 * (sum_a pi2(a|t,s) q1(t,s,a) >= v1(t,s)), then pi2's value dominates
 * pi1's value everywhere. The report separates the two possible negative
 * outcomes: the hypothesis failing (nothing is claimed, not a bug) and the
 * hypothesis holding while the conclusion fails (which would mean the
 * implementation is broken).
 */
struct ImprovementReport {
  bool hypothesis_met = false;
  bool improvement_holds = false;
  double min_hypothesis_margin = 0.0;   // min over (t, s) of sum_a pi2 q1 - v1
  double min_improvement_margin = 0.0;  // min over (t, s) of v2 - v1
  std::string message;                  // "ok", "hypothesis not met", "theorem violated"
};
ImprovementReport policy_improvement_check(const TabularNvmdp& model,
                                           const TimePolicy& pi1,
                                           const TimePolicy& pi2);

/**
 * For a model whose dynamics, rewards and discounts are time-invariant (up
 * to the horizon embedding) with all discounts below 1, optimal values far
 * from the horizon must agree across epochs, and the optimal decision rule
 * of any such epoch, replicated over all time, must be near-optimal there.
 * The check compares optimal q slices pairwise over the front window
 * t < horizon/2 and evaluates the replicated epoch-0 greedy rule, with
 * tolerances derived from how fast horizon truncation error decays:
 * the tail of value past epoch k is bounded by gamma_max^(H-k) V where
 * V = reward_bound / (1 - gamma_max).
 */
struct StationaryReport {
  bool stationary = false;     // input was time-invariant with gamma_max < 1
  double gamma_max = 0.0;
  int window = 0;              // epochs compared: t < window
  double window_q_diff = 0.0;  // max |q*_t - q*_k| over the window
  double window_tolerance = 0.0;
  double replicated_gap = 0.0;  // max v* - v^(replicated greedy) over the window
  double replicated_tolerance = 0.0;
  bool pass = false;
  std::string message;
};
StationaryReport stationary_reduction_check(const TabularNvmdp& model);

/// Serializes tables as {"horizon", "num_states", "num_actions", "v", "q"}
/// with v indexed [t][s] and q indexed [t][s][a], t = 0..horizon.
std::string dp_result_to_json(const DpResult& result);

}  // namespace nvmdp
