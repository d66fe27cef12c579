#include "nvmdp/verify.hpp"

#include <algorithm>
#include <cmath>

#include "nvmdp/dp.hpp"

namespace nvmdp {

TimePolicy SoftmaxPolicyParams::to_policy() const {
  const size_t want = static_cast<size_t>(horizon + 1) * num_states * num_actions;
  if (logits.size() != want) {
    throw ValidationError("logit array does not match the declared shape");
  }
  std::vector<double> probs(want);
  for (int t = 0; t <= horizon; ++t) {
    for (int s = 0; s < num_states; ++s) {
      const size_t base = index(t, s, 0);
      double hi = logits[base];
      for (int a = 1; a < num_actions; ++a) hi = std::max(hi, logits[base + a]);
      double z = 0.0;
      for (int a = 0; a < num_actions; ++a) {
        probs[base + a] = std::exp(logits[base + a] - hi);
        z += probs[base + a];
      }
      for (int a = 0; a < num_actions; ++a) probs[base + a] /= z;
    }
  }
  return TimePolicy(horizon, num_states, num_actions, std::move(probs));
}

SoftmaxPolicyParams SoftmaxPolicyParams::random(Rng& rng, int horizon,
                                                int num_states, int num_actions,
                                                double scale) {
  SoftmaxPolicyParams p;
  p.horizon = horizon;
  p.num_states = num_states;
  p.num_actions = num_actions;
  p.logits.resize(static_cast<size_t>(horizon + 1) * num_states * num_actions);
  for (double& x : p.logits) x = scale * (2.0 * rng.uniform01() - 1.0);
  return p;
}

namespace {

void check_query(const TabularNvmdp& model, const TimePolicy& policy, int t, int s) {
  if (policy.num_states() != model.num_states() ||
      policy.num_actions() != model.num_actions() ||
      policy.horizon() < model.horizon()) {
    throw ValidationError("policy shape does not cover the model");
  }
  model.check_state(s);
  if (t < 0 || t >= model.horizon()) {
    throw ValidationError("query epoch must satisfy 0 <= t < horizon");
  }
}

// Discounted state occupancies seeded at (t0, s0): row i - t0 holds
// d_i(x) = sum over length-(i - t0) prefixes of the probability of being at
// x at epoch i times the discounts collected along the way.
std::vector<std::vector<double>> occupancies(const TabularNvmdp& model,
                                             const TimePolicy& policy, int t0,
                                             int s0) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  std::vector<std::vector<double>> d;
  d.reserve(static_cast<size_t>(H - t0));
  std::vector<double> cur(static_cast<size_t>(S), 0.0);
  cur[static_cast<size_t>(s0)] = 1.0;
  d.push_back(cur);
  for (int i = t0; i + 1 < H; ++i) {
    std::vector<double> next(static_cast<size_t>(S), 0.0);
    for (int x = 0; x < S; ++x) {
      const double mass = d.back()[static_cast<size_t>(x)];
      if (mass == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        const double pa = policy.prob(i, x, a);
        if (pa == 0.0) continue;
        const double* p = model.transition_row(i, x, a);
        for (int x2 = 0; x2 < S; ++x2) {
          if (p[x2] == 0.0) continue;
          next[static_cast<size_t>(x2)] +=
              mass * pa * p[x2] * model.discount(i + 1, x, a, x2);
        }
      }
    }
    d.push_back(std::move(next));
  }
  return d;
}

}  // namespace

std::vector<double> exact_policy_gradient(const TabularNvmdp& model,
                                          const SoftmaxPolicyParams& params,
                                          int t, int s, bool advantage_form) {
  TimePolicy policy = params.to_policy();
  check_query(model, policy, t, s);
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();

  DpResult eval = policy_evaluation(model, policy);
  std::vector<std::vector<double>> d = occupancies(model, policy, t, s);

  std::vector<double> grad(params.logits.size(), 0.0);
  for (int i = t; i < H; ++i) {
    const std::vector<double>& di = d[static_cast<size_t>(i - t)];
    for (int x = 0; x < S; ++x) {
      const double mass = di[static_cast<size_t>(x)];
      if (mass == 0.0) continue;
      if (advantage_form) {
        for (int a = 0; a < A; ++a) {
          grad[params.index(i, x, a)] =
              mass * policy.prob(i, x, a) * (eval.q.at(i, x, a) - eval.v.at(i, x));
        }
      } else {
        // Literal chain rule through the softmax Jacobian with raw action
        // values; equals the advantage form because each row sums to one.
        for (int a = 0; a < A; ++a) {
          double acc = 0.0;
          for (int b = 0; b < A; ++b) {
            const double jac =
                policy.prob(i, x, b) * ((a == b ? 1.0 : 0.0) - policy.prob(i, x, a));
            acc += jac * eval.q.at(i, x, b);
          }
          grad[params.index(i, x, a)] = mass * acc;
        }
      }
    }
  }
  return grad;
}

PerfDiffReport performance_difference(const TabularNvmdp& model,
                                      const TimePolicy& pi1, const TimePolicy& pi2,
                                      int t, int s) {
  check_query(model, pi1, t, s);
  check_query(model, pi2, t, s);
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();

  DpResult eval1 = policy_evaluation(model, pi1);
  DpResult eval2 = policy_evaluation(model, pi2);
  std::vector<std::vector<double>> d = occupancies(model, pi2, t, s);

  PerfDiffReport rep;
  rep.lhs = eval2.v.at(t, s) - eval1.v.at(t, s);
  double rhs = 0.0;
  for (int i = t; i < H; ++i) {
    const std::vector<double>& di = d[static_cast<size_t>(i - t)];
    for (int x = 0; x < S; ++x) {
      const double mass = di[static_cast<size_t>(x)];
      if (mass == 0.0) continue;
      double mix = 0.0;
      for (int a = 0; a < A; ++a) {
        mix += pi2.prob(i, x, a) * (eval1.q.at(i, x, a) - eval1.v.at(i, x));
      }
      rhs += mass * mix;
    }
  }
  rep.rhs = rhs;
  rep.residual = std::abs(rep.lhs - rep.rhs);
  return rep;
}

double policy_advantage_D(const TabularNvmdp& model, const TimePolicy& pi1,
                          const TimePolicy& pi2, int t, int s, bool ratio_form) {
  check_query(model, pi1, t, s);
  check_query(model, pi2, t, s);
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();

  DpResult eval1 = policy_evaluation(model, pi1);
  std::vector<std::vector<double>> d = occupancies(model, pi1, t, s);

  double total = 0.0;
  for (int i = t; i < H; ++i) {
    const std::vector<double>& di = d[static_cast<size_t>(i - t)];
    for (int x = 0; x < S; ++x) {
      const double mass = di[static_cast<size_t>(x)];
      if (mass == 0.0) continue;
      double mix = 0.0;
      for (int a = 0; a < A; ++a) {
        const double adv = eval1.q.at(i, x, a) - eval1.v.at(i, x);
        if (ratio_form) {
          const double p1 = pi1.prob(i, x, a);
          const double p2 = pi2.prob(i, x, a);
          if (p1 == 0.0) {
            if (p2 == 0.0) continue;
            throw ValidationError(
                "ratio form needs pi1 > 0 wherever pi2 > 0");
          }
          mix += p1 * (p2 / p1) * adv;
        } else {
          mix += pi2.prob(i, x, a) * adv;
        }
      }
      total += mass * mix;
    }
  }
  return total;
}

TrpoReport trpo_bound_check(const TabularNvmdp& model, const TimePolicy& pi1,
                            const TimePolicy& pi2, int t) {
  check_query(model, pi1, t, 0);
  check_query(model, pi2, t, 0);
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();

  TrpoReport rep;
  for (int j = t; j < H; ++j) {
    for (int x = 0; x < S; ++x) {
      double l1 = 0.0;
      for (int a = 0; a < A; ++a) {
        l1 += std::abs(pi1.prob(j, x, a) - pi2.prob(j, x, a));
      }
      rep.alpha = std::max(rep.alpha, 0.5 * l1);
    }
  }

  DpResult eval1 = policy_evaluation(model, pi1);
  DpResult eval2 = policy_evaluation(model, pi2);
  for (int i = t; i < H; ++i) {
    for (int x = 0; x < S; ++x) {
      for (int a = 0; a < A; ++a) {
        rep.a_bound =
            std::max(rep.a_bound, std::abs(eval1.q.at(i, x, a) - eval1.v.at(i, x)));
      }
    }
  }

  double gamma_prod = 1.0;  // product of per-epoch max discounts, t+1..i
  double csum = 0.0;
  for (int i = t + 1; i < H; ++i) {
    gamma_prod *= model.max_discount_at(i);
    csum += static_cast<double>(i - t) * gamma_prod;
  }
  rep.constant = 4.0 * rep.a_bound * csum;
  rep.bound = rep.constant * rep.alpha * rep.alpha;

  for (int s = 0; s < S; ++s) {
    const double gap = eval2.v.at(t, s) - eval1.v.at(t, s);
    const double d = policy_advantage_D(model, pi1, pi2, t, s);
    rep.worst_residual = std::max(rep.worst_residual, std::abs(gap - d));
  }
  rep.ok = rep.worst_residual <= rep.bound + 1e-12;
  return rep;
}

}  // namespace nvmdp
