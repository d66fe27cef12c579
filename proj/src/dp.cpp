#include "nvmdp/dp.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <json.hpp>

namespace nvmdp {

namespace {

// Fills one q row (all actions at fixed t, s) from the next-epoch values.
inline void q_row_from_next(const TabularNvmdp& model, int t, int s,
                            const double* v_next, double* q_out) {
  const int S = model.num_states(), A = model.num_actions();
  for (int a = 0; a < A; ++a) {
    const double* p = model.transition_row(t, s, a);
    double acc = 0.0;
    for (int s2 = 0; s2 < S; ++s2) {
      if (p[s2] == 0.0) continue;
      acc += p[s2] * (model.mean_reward(t, s, a, s2) +
                      model.discount(t + 1, s, a, s2) * v_next[s2]);
    }
    q_out[a] = acc;
  }
}

TimePolicy greedy_from_q(const QTable& q) {
  const int H = q.horizon, S = q.num_states, A = q.num_actions;
  return TimePolicy::deterministic(H, S, A, [&q, A](int t, int s) {
    int best = 0;
    for (int a = 1; a < A; ++a) {
      if (q.at(t, s, a) > q.at(t, s, best)) best = a;
    }
    return best;
  });
}

DpResult backward_sweep(const TabularNvmdp& model, const TimePolicy* policy) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  ValueTable v(H, S);
  QTable q(H, S, A);
  for (int t = H - 1; t >= 0; --t) {
    const double* v_next = &v.data[static_cast<size_t>(t + 1) * S];
    for (int s = 0; s < S; ++s) {
      double* q_row = &q.at(t, s, 0);
      q_row_from_next(model, t, s, v_next, q_row);
      if (policy) {
        const double* pi = policy->row(t, s);
        double mix = 0.0;
        for (int a = 0; a < A; ++a) mix += pi[a] * q_row[a];
        v.at(t, s) = mix;
      } else {
        v.at(t, s) = *std::max_element(q_row, q_row + A);
      }
    }
  }
  TimePolicy greedy = greedy_from_q(q);
  return DpResult{std::move(v), std::move(q), std::move(greedy)};
}

}  // namespace

DpResult policy_evaluation(const TabularNvmdp& model, const TimePolicy& policy) {
  if (policy.num_states() != model.num_states() ||
      policy.num_actions() != model.num_actions() ||
      policy.horizon() < model.horizon()) {
    throw ValidationError("policy shape does not cover the model");
  }
  return backward_sweep(model, &policy);
}

DpResult value_iteration(const TabularNvmdp& model) {
  return backward_sweep(model, nullptr);
}

double bellman_residual(const TabularNvmdp& model, const QTable& q) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  if (q.horizon != H || q.num_states != S || q.num_actions != A) {
    throw ValidationError("q table shape does not match the model");
  }
  double worst = 0.0;
  std::vector<double> v_next(static_cast<size_t>(S));
  std::vector<double> row(static_cast<size_t>(A));
  for (int t = H - 1; t >= 0; --t) {
    for (int s2 = 0; s2 < S; ++s2) {
      const double* next_row =
          &q.data[(static_cast<size_t>(t + 1) * S + s2) * A];
      v_next[static_cast<size_t>(s2)] = *std::max_element(next_row, next_row + A);
    }
    for (int s = 0; s < S; ++s) {
      q_row_from_next(model, t, s, v_next.data(), row.data());
      for (int a = 0; a < A; ++a) {
        worst = std::max(worst, std::abs(q.at(t, s, a) - row[static_cast<size_t>(a)]));
      }
    }
  }
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      worst = std::max(worst, std::abs(q.at(H, s, a)));
    }
  }
  return worst;
}

TabularNvmdp reward_shaping_transform(const TabularNvmdp& model,
                                      const std::vector<double>& phi) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  if (phi.size() != static_cast<size_t>(H + 1) * S) {
    throw ValidationError("phi must be flattened [t][s] for t = 0..horizon");
  }
  for (double x : phi) {
    if (!std::isfinite(x)) throw ValidationError("phi must be finite");
  }
  for (int t = 0; t <= H; ++t) {
    for (int s : model.terminal_states()) {
      if (phi[static_cast<size_t>(t) * S + s] != 0.0) {
        throw ValidationError("phi must be zero on terminal states");
      }
    }
  }

  auto base = std::make_shared<TabularNvmdp>(model);
  auto pot = std::make_shared<std::vector<double>>(phi);
  auto delta = [base, pot, S](int t, int s, int a, int s2) {
    // gamma_{t+1} phi_{t+1}(s') - phi_t(s); past the horizon the model
    // reports gamma = 0 and the phi row at t = horizon never contributes.
    return base->discount(t + 1, s, a, s2) * (*pot)[static_cast<size_t>(t + 1) * S + s2] -
           (*pot)[static_cast<size_t>(t) * S + s];
  };

  // The shaped rewards need their own bound, computed over exactly the
  // cells the constructor will materialize (terminal rows stay zero).
  double rb = 0.0;
  for (int t = 0; t < H; ++t) {
    for (int s = 0; s < S; ++s) {
      if (model.is_terminal(s)) continue;
      for (int a = 0; a < A; ++a) {
        for (int s2 = 0; s2 < S; ++s2) {
          rb = std::max(rb, std::abs(model.mean_reward(t, s, a, s2) + delta(t, s, a, s2)));
        }
      }
    }
  }

  NvmdpDef def;
  def.num_states = S;
  def.num_actions = A;
  def.horizon = H;
  def.reward_bound = rb;
  def.transition = [base, S](int t, int s, int a) {
    const double* row = base->transition_row(t, s, a);
    return std::vector<double>(row, row + S);
  };
  def.mean_reward = [base, delta](int t, int s, int a, int s2) {
    return base->mean_reward(t, s, a, s2) + delta(t, s, a, s2);
  };
  def.discount = [base](int t1, int s, int a, int s2) {
    return base->discount(t1, s, a, s2);
  };
  if (model.has_reward_sampler()) {
    def.reward_sampler = [base, delta](int t, int s, int a, int s2, Rng& rng) {
      return base->sample_reward(t, s, a, s2, rng) + delta(t, s, a, s2);
    };
  }
  def.start_states = model.start_distribution();
  def.terminal_states = model.terminal_states();
  return TabularNvmdp(def);
}

ImprovementReport policy_improvement_check(const TabularNvmdp& model,
                                           const TimePolicy& pi1,
                                           const TimePolicy& pi2) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  for (const TimePolicy* p : {&pi1, &pi2}) {
    if (p->num_states() != S || p->num_actions() != A || p->horizon() < H) {
      throw ValidationError("policy shape does not cover the model");
    }
  }
  DpResult eval1 = policy_evaluation(model, pi1);
  DpResult eval2 = policy_evaluation(model, pi2);

  ImprovementReport rep;
  rep.min_hypothesis_margin = 0.0;
  rep.min_improvement_margin = 0.0;
  bool first = true;
  for (int t = 0; t < H; ++t) {
    for (int s = 0; s < S; ++s) {
      double mix = 0.0;
      for (int a = 0; a < A; ++a) mix += pi2.prob(t, s, a) * eval1.q.at(t, s, a);
      double hyp = mix - eval1.v.at(t, s);
      double imp = eval2.v.at(t, s) - eval1.v.at(t, s);
      if (first) {
        rep.min_hypothesis_margin = hyp;
        rep.min_improvement_margin = imp;
        first = false;
      } else {
        rep.min_hypothesis_margin = std::min(rep.min_hypothesis_margin, hyp);
        rep.min_improvement_margin = std::min(rep.min_improvement_margin, imp);
      }
    }
  }
  const double slack = 1e-9;
  rep.hypothesis_met = rep.min_hypothesis_margin >= -slack;
  rep.improvement_holds = rep.min_improvement_margin >= -slack;
  if (!rep.hypothesis_met) {
    rep.message = "hypothesis not met";
  } else if (!rep.improvement_holds) {
    rep.message = "theorem violated";
  } else {
    rep.message = "ok";
  }
  return rep;
}

StationaryReport stationary_reduction_check(const TabularNvmdp& model) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  StationaryReport rep;
  rep.window = H / 2;

  double gmax = 0.0;
  for (int t1 = 1; t1 < H; ++t1) gmax = std::max(gmax, model.max_discount_at(t1));
  rep.gamma_max = gmax;
  if (gmax >= 1.0) {
    rep.message = "not applicable: needs all discounts below 1";
    return rep;
  }

  // Time invariance, slice by slice against t = 0. The final discount slice
  // is excluded: the embedding zeroes it no matter what the input was.
  for (int t = 1; t < H; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        for (int s2 = 0; s2 < S; ++s2) {
          if (model.transition(t, s, a, s2) != model.transition(0, s, a, s2) ||
              model.mean_reward(t, s, a, s2) != model.mean_reward(0, s, a, s2) ||
              (t < H - 1 &&
               model.discount(t + 1, s, a, s2) != model.discount(1, s, a, s2))) {
            rep.message = "not applicable: model is not time-invariant";
            return rep;
          }
        }
      }
    }
  }
  rep.stationary = true;

  const double v_inf =
      gmax < 1.0 ? model.reward_bound() / (1.0 - gmax) : model.reward_bound();
  const int W = rep.window;
  // Truncation error of the optimal values at epoch t is at most
  // gamma_max^(H-t) v_inf, so any two epochs in the front window agree to
  // twice the worst such tail.
  rep.window_tolerance = 2.0 * std::pow(gmax, H - W) * v_inf;
  // The replicated rule can lose at most a per-epoch argmax swap worth
  // 4 gamma_max^(H-i) v_inf at epoch i, summed with discounting.
  rep.replicated_tolerance = 4.0 * H * std::pow(gmax, H - W) * v_inf;

  DpResult star = value_iteration(model);
  double qdiff = 0.0;
  for (int t = 0; t < W; ++t) {
    for (int k = t + 1; k < W; ++k) {
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          qdiff = std::max(qdiff, std::abs(star.q.at(t, s, a) - star.q.at(k, s, a)));
        }
      }
    }
  }
  rep.window_q_diff = qdiff;

  TimePolicy replicated = TimePolicy::deterministic(
      H, S, A, [&star](int, int s) { return star.greedy.greedy_action(0, s); });
  DpResult rep_eval = policy_evaluation(model, replicated);
  double gap = 0.0;
  for (int t = 0; t < W; ++t) {
    for (int s = 0; s < S; ++s) {
      gap = std::max(gap, star.v.at(t, s) - rep_eval.v.at(t, s));
    }
  }
  rep.replicated_gap = gap;

  rep.pass = qdiff <= rep.window_tolerance && gap <= rep.replicated_tolerance;
  rep.message = rep.pass ? "ok" : "tolerance exceeded";
  return rep;
}

std::string dp_result_to_json(const DpResult& result) {
  nlohmann::json doc;
  doc["horizon"] = result.v.horizon;
  doc["num_states"] = result.v.num_states;
  doc["num_actions"] = result.q.num_actions;
  nlohmann::json v = nlohmann::json::array();
  for (int t = 0; t <= result.v.horizon; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int s = 0; s < result.v.num_states; ++s) row.push_back(result.v.at(t, s));
    v.push_back(std::move(row));
  }
  nlohmann::json q = nlohmann::json::array();
  for (int t = 0; t <= result.q.horizon; ++t) {
    nlohmann::json per_s = nlohmann::json::array();
    for (int s = 0; s < result.q.num_states; ++s) {
      nlohmann::json row = nlohmann::json::array();
      for (int a = 0; a < result.q.num_actions; ++a) row.push_back(result.q.at(t, s, a));
      per_s.push_back(std::move(row));
    }
    q.push_back(std::move(per_s));
  }
  doc["v"] = std::move(v);
  doc["q"] = std::move(q);
  return doc.dump();
}

}  // namespace nvmdp
