#pragma once

#include <string>

#include <Eigen/Dense>

#include "nvmdp/model.hpp"

namespace nvmdp {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/**
 * One decision epoch of the model and a policy, laid out as matrices over
 * the canonical enumeration of state-action pairs: row (s, a) = s * A + a
 * (state-major, action-minor). With SA = num_states * num_actions:
 *
 *   P   (SA x S)   transition kernel at t: P[(s,a)][s'] = p_t(s'|s,a)
 *   Pi  (S x SA)   policy mix at t: Pi[s][(s',a)] = pi_t(a|s) when s' == s
 *   W   (SA x S)   entering discounts: W[(s,a)][s'] = gamma_{t+1}(s,a,s')
 *   M   (SA x SA)  W broadcast over the successor action coordinate
 *   J   (SA x S)   W entrywise-times P: discounted kernel, v_{t+1} -> q_t
 *   K   (SA x SA)  M entrywise-times (P Pi_{t+1}): q_{t+1} -> q_t
 *   L   (S x S)    Pi_t J: discounted state-to-state kernel, v_{t+1} -> v_t
 *   U   (SA x S)   copies a state function onto its (s, .) rows; Pi U = I
 *
 * These satisfy the one-epoch identities v_t = Pi_t q_t,
 * q_t = r_t + J v_{t+1}, v_t = Pi_t r_t + L v_{t+1},
 * q_t = r_t + K q_{t+1}, and J Pi_{t+1} = K, where r_t is the expected
 * reward vector over (s, a). Matrix views are meant for inspection and
 * cross-checking, not bulk computation, and refuse to build when SA
 * exceeds 10^4 rows.
 */
struct MatrixBundle {
  int t = 0;
  int S = 0;
  int A = 0;
  Mat P, Pi, W, M, J, K, L, U;
  Eigen::VectorXd r;  // expected one-step reward over (s, a) at t
};

/// Builds the epoch-t bundle. Requires t < horizon and SA <= 10^4.
MatrixBundle build_bundle(const TabularNvmdp& model, const TimePolicy& policy, int t);

/**
 * Residuals of the value recursions in matrix form against externally
 * computed tables (normally a backward sweep's output). Every field is a
 * max-abs residual over all epochs, except the finite_sum pair, which
 * expands the full horizon sum at t = 0 with explicit kernel products
 * (a genuinely different evaluation path from the epoch recursions).
 */
struct RecursionReport {
  double v_from_q = 0.0;       // v_t vs Pi_t q_t
  double q_onestep_j = 0.0;    // q_t vs r_t + J v_{t+1}
  double v_onestep_l = 0.0;    // v_t vs Pi_t r_t + L v_{t+1}
  double q_onestep_k = 0.0;    // q_t vs r_t + K q_{t+1}
  double k_from_j = 0.0;       // K vs J Pi_{t+1}
  double v_finite_sum = 0.0;   // v_0 vs sum of L-products applied to rewards
  double q_finite_sum = 0.0;   // q_0 vs sum of K-products applied to rewards
  double max_residual() const;
};
RecursionReport value_recursion_check(const TabularNvmdp& model,
                                      const TimePolicy& policy,
                                      const ValueTable& v, const QTable& q);

/**
 * Writes each bundle matrix to <dir>/<name>.csv (P, Pi, W, M, J, K, L, U,
 * r). The first row holds column labels ("s3" or "s3a1"), the first column
 * row labels. The directory is created if missing.
 */
void dump_bundle_csv(const MatrixBundle& bundle, const std::string& dir);

}  // namespace nvmdp
