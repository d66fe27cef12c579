#pragma once

#include <vector>

#include "nvmdp/model.hpp"

namespace nvmdp {

/**
 * Softmax-parametrized time-indexed policy: pi_t(a|s) proportional to
 * exp(logits[t][s][a]). Used by the verification suites because the exact
 * gradient of a value with respect to these logits has a closed form that
 * an independent finite-difference estimate can be checked against.
 */
struct SoftmaxPolicyParams {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> logits;  // flattened [t][s][a], t = 0..horizon

  size_t index(int t, int s, int a) const {
    return (static_cast<size_t>(t) * num_states + s) * num_actions + a;
  }
  TimePolicy to_policy() const;
  static SoftmaxPolicyParams random(Rng& rng, int horizon, int num_states,
                                    int num_actions, double scale);
};

/**
 * Exact gradient of v^pi_t(s) with respect to every logit, flattened like
 * the logits themselves. The gradient propagates the policy's discounted
 * state occupancy from (t, s) forward and weights each visited (i, x, a)
 * by the policy's value estimates there:
 *
 *   advantage_form  d_i(x) pi_i(a|x) (q_i(x,a) - v_i(x))
 *   q form          d_i(x) sum_b pi_i(b|x) (delta_ab - pi_i(a|x)) q_i(x,b)
 *
 * The two are algebraically equal (the softmax rows sum to one); computing
 * both gives an internal cross-check on top of the finite-difference one.
 */
std::vector<double> exact_policy_gradient(const TabularNvmdp& model,
                                          const SoftmaxPolicyParams& params,
                                          int t, int s,
                                          bool advantage_form = true);

/**
 * Both sides of the exact performance-difference identity at (t, s): the
 * value gap v^pi2 - v^pi1 equals pi2's occupancy-weighted advantage of pi2's
 * action mix under pi1's values.
 */
struct PerfDiffReport {
  double lhs = 0.0;       // v^pi2_t(s) - v^pi1_t(s)
  double rhs = 0.0;       // occupancy form under pi2
  double residual = 0.0;  // |lhs - rhs|
};
PerfDiffReport performance_difference(const TabularNvmdp& model,
                                      const TimePolicy& pi1, const TimePolicy& pi2,
                                      int t, int s);

/**
 * The surrogate gap: pi1's discounted occupancies from (t, s), action mix
 * reweighted to pi2, advantages under pi1. This is the quantity the
 * first-order policy improvement machinery optimizes in place of the true
 * gap. ratio_form evaluates the same sum through importance ratios
 * pi2/pi1 (requires pi1 > 0 wherever pi2 > 0).
 */
double policy_advantage_D(const TabularNvmdp& model, const TimePolicy& pi1,
                          const TimePolicy& pi2, int t, int s,
                          bool ratio_form = false);

/**
 * Checks the quadratic trust-region style bound: for every state s,
 *
 *   |v^pi2_t(s) - v^pi1_t(s) - D_t(s)| <= C alpha^2
 *
 * where alpha is the largest total-variation distance between the two
 * policies' rows over epochs t..horizon-1, and C = 4 A_B sum_{i>t} (i - t)
 * Gamma_M(t, i) with A_B the largest advantage magnitude under pi1 and
 * Gamma_M the product of per-epoch worst-case discounts. So the surrogate
 * tracks the true gap to second order in how far the policies are apart.
 */
struct TrpoReport {
  double alpha = 0.0;
  double a_bound = 0.0;
  double constant = 0.0;        // C
  double bound = 0.0;           // C alpha^2
  double worst_residual = 0.0;  // max_s |lhs - D|
  bool ok = false;
};
TrpoReport trpo_bound_check(const TabularNvmdp& model, const TimePolicy& pi1,
                            const TimePolicy& pi2, int t);

}  // namespace nvmdp
