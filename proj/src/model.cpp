#include "nvmdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nvmdp {

namespace {

std::string cell_name(int t, int s, int a) {
  std::ostringstream os;
  os << "(t=" << t << ", s=" << s << ", a=" << a << ")";
  return os.str();
}

// Shared row validation: nonnegative entries, sum within 1e-12 of 1, then an
// exact renormalization so downstream code can treat sums as exactly 1.
void validate_and_normalize_row(double* row, int n, const std::string& where) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(row[i] >= 0.0)) {  // catches negatives and NaN
      throw ValidationError("probability row at " + where + " has a negative or NaN entry");
    }
    sum += row[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "probability row at " << where << " sums to " << sum << ", expected 1";
    throw ValidationError(os.str());
  }
  for (int i = 0; i < n; ++i) row[i] /= sum;
}

}  // namespace

TabularNvmdp::TabularNvmdp(const NvmdpDef& def) {
  if (def.num_states <= 0 || def.num_actions <= 0 || def.horizon <= 0) {
    throw ValidationError("model dimensions must be positive");
  }
  if (!(def.reward_bound >= 0.0)) {
    throw ValidationError("reward_bound must be nonnegative");
  }
  if (!def.transition || !def.mean_reward || !def.discount) {
    throw ValidationError("transition, mean_reward and discount callbacks are required");
  }
  S_ = def.num_states;
  A_ = def.num_actions;
  H_ = def.horizon;
  rb_ = def.reward_bound;
  sampler_ = def.reward_sampler;

  is_term_.assign(static_cast<size_t>(S_), 0);
  for (int s : def.terminal_states) {
    if (s < 0 || s >= S_) throw ValidationError("terminal state index out of range");
    if (!is_term_[static_cast<size_t>(s)]) {
      is_term_[static_cast<size_t>(s)] = 1;
      terminals_.push_back(s);
    }
  }
  std::sort(terminals_.begin(), terminals_.end());

  if (static_cast<int>(def.start_states.size()) != S_) {
    throw ValidationError("start_states must have one entry per state");
  }
  start_ = def.start_states;
  validate_and_normalize_row(start_.data(), S_, "start distribution");

  const size_t cells = static_cast<size_t>(H_) * S_ * A_ * S_;
  trans_.assign(cells, 0.0);
  mrew_.assign(cells, 0.0);
  disc_.assign(cells, 0.0);
  maxdisc_.assign(static_cast<size_t>(H_), 0.0);

  for (int t = 0; t < H_; ++t) {
    double slice_max = 0.0;
    for (int s = 0; s < S_; ++s) {
      const bool term = is_term_[static_cast<size_t>(s)] != 0;
      for (int a = 0; a < A_; ++a) {
        double* row = &trans_[tidx(t, s, a, 0)];
        if (term) {
          // Absorbing by construction, regardless of what the callbacks say.
          row[s] = 1.0;
          continue;
        }
        std::vector<double> p = def.transition(t, s, a);
        if (static_cast<int>(p.size()) != S_) {
          throw ValidationError("transition row at " + cell_name(t, s, a) +
                                " has wrong length");
        }
        std::copy(p.begin(), p.end(), row);
        validate_and_normalize_row(row, S_, cell_name(t, s, a));

        for (int s2 = 0; s2 < S_; ++s2) {
          const size_t k = tidx(t, s, a, s2);
          double r = def.mean_reward(t, s, a, s2);
          if (!std::isfinite(r) || std::abs(r) > rb_ + 1e-12) {
            std::ostringstream os;
            os << "mean reward " << r << " at " << cell_name(t, s, a)
               << " exceeds the declared bound " << rb_;
            throw ValidationError(os.str());
          }
          mrew_[k] = r;

          // disc_ at slice t stores gamma_{t+1}. The final slice is forced
          // to zero: no value flows back from the horizon.
          double g = (t == H_ - 1) ? 0.0 : def.discount(t + 1, s, a, s2);
          if (!(g >= 0.0) || !std::isfinite(g)) {
            throw ValidationError("discount at " + cell_name(t, s, a) +
                                  " must be finite and nonnegative");
          }
          if (is_term_[static_cast<size_t>(s2)]) g = 0.0;  // returns stop at terminals
          disc_[k] = g;
          if (g > slice_max) slice_max = g;
        }
      }
    }
    maxdisc_[static_cast<size_t>(t)] = slice_max;
  }
}

int TabularNvmdp::sample_start(Rng& rng) const {
  double u = rng.uniform01();
  double acc = 0.0;
  for (int s = 0; s < S_; ++s) {
    acc += start_[static_cast<size_t>(s)];
    if (u < acc) return s;
  }
  return S_ - 1;
}

int TabularNvmdp::sample_next(int t, int s, int a, Rng& rng) const {
  const double* row = transition_row(t, s, a);
  double u = rng.uniform01();
  double acc = 0.0;
  for (int s2 = 0; s2 < S_; ++s2) {
    acc += row[s2];
    if (u < acc) return s2;
  }
  return S_ - 1;
}

void TabularNvmdp::check_state(int s) const {
  if (s < 0 || s >= S_) throw ValidationError("state index out of range");
}

void TabularNvmdp::check_action(int a) const {
  if (a < 0 || a >= A_) throw ValidationError("action index out of range");
}

void TabularNvmdp::check_time(int t) const {
  if (t < 0 || t > H_) throw ValidationError("time index out of range");
}

TimePolicy::TimePolicy(int horizon, int num_states, int num_actions,
                       std::vector<double> probs)
    : H_(horizon), S_(num_states), A_(num_actions), probs_(std::move(probs)) {
  if (H_ <= 0 || S_ <= 0 || A_ <= 0) {
    throw ValidationError("policy dimensions must be positive");
  }
  const size_t want = static_cast<size_t>(H_ + 1) * S_ * A_;
  if (probs_.size() != want) {
    throw ValidationError("policy probability array has wrong length");
  }
  for (int t = 0; t <= H_; ++t) {
    for (int s = 0; s < S_; ++s) {
      std::ostringstream os;
      os << "(t=" << t << ", s=" << s << ")";
      validate_and_normalize_row(&probs_[pidx(t, s, 0)], A_, os.str());
    }
  }
}

TimePolicy TimePolicy::uniform(int horizon, int num_states, int num_actions) {
  std::vector<double> p(static_cast<size_t>(horizon + 1) * num_states * num_actions,
                        1.0 / num_actions);
  return TimePolicy(horizon, num_states, num_actions, std::move(p));
}

TimePolicy TimePolicy::deterministic(int horizon, int num_states, int num_actions,
                                     const std::function<int(int, int)>& act) {
  std::vector<double> p(static_cast<size_t>(horizon + 1) * num_states * num_actions, 0.0);
  for (int t = 0; t <= horizon; ++t) {
    for (int s = 0; s < num_states; ++s) {
      int a = act(t, s);
      if (a < 0 || a >= num_actions) {
        throw ValidationError("deterministic policy chose an out-of-range action");
      }
      p[(static_cast<size_t>(t) * num_states + s) * num_actions + a] = 1.0;
    }
  }
  return TimePolicy(horizon, num_states, num_actions, std::move(p));
}

int TimePolicy::greedy_action(int t, int s) const {
  const double* r = row(t, s);
  int best = 0;
  for (int a = 1; a < A_; ++a) {
    if (r[a] > r[best]) best = a;
  }
  return best;
}

namespace {

void check_chain(const std::vector<TrajectoryStep>& traj) {
  for (size_t k = 1; k < traj.size(); ++k) {
    if (traj[k].s != traj[k - 1].s_next) {
      throw ValidationError("trajectory does not chain: step " + std::to_string(k) +
                            " starts where the previous step did not end");
    }
  }
}

void check_traj_indices(const TabularNvmdp& model,
                        const std::vector<TrajectoryStep>& traj) {
  for (const auto& st : traj) {
    model.check_state(st.s);
    model.check_state(st.s_next);
    model.check_action(st.a);
  }
}

}  // namespace

double discount_product(const TabularNvmdp& model,
                        const std::vector<TrajectoryStep>& traj, int t) {
  if (t < 0) throw ValidationError("start epoch must be nonnegative");
  check_traj_indices(model, traj);
  check_chain(traj);
  double g = 1.0;
  for (size_t k = 0; k < traj.size(); ++k) {
    const auto& st = traj[k];
    g *= model.discount(t + static_cast<int>(k) + 1, st.s, st.a, st.s_next);
  }
  return g;
}

double return_of_trajectory(const TabularNvmdp& model,
                            const std::vector<TrajectoryStep>& traj, int t) {
  if (t < 0) throw ValidationError("start epoch must be nonnegative");
  if (t + static_cast<int>(traj.size()) > model.horizon()) {
    throw ValidationError("trajectory runs past the horizon");
  }
  check_traj_indices(model, traj);
  check_chain(traj);
  double g = 1.0;   // discount accumulated up to the current step
  double ret = 0.0;
  for (size_t k = 0; k < traj.size(); ++k) {
    const auto& st = traj[k];
    ret += g * st.reward;
    g *= model.discount(t + static_cast<int>(k) + 1, st.s, st.a, st.s_next);
  }
  return ret;
}

double advantage(const QTable& q, const ValueTable& v, int t, int s, int a) {
  if (q.horizon != v.horizon || q.num_states != v.num_states) {
    throw ValidationError("q and v tables have mismatched shapes");
  }
  if (t < 0 || t > q.horizon) throw ValidationError("time index out of range");
  if (s < 0 || s >= q.num_states) throw ValidationError("state index out of range");
  if (a < 0 || a >= q.num_actions) throw ValidationError("action index out of range");
  return q.at(t, s, a) - v.at(t, s);
}

double value_bound(const TabularNvmdp& model) {
  const int H = model.horizon();
  // S_t = 1 + max_gamma(t+1) * S_{t+1}, S_H = 0: worst-case sum of discount
  // products from epoch t out to the horizon, one unit of reward per step.
  double next = 0.0;
  double best = 0.0;
  for (int t = H - 1; t >= 0; --t) {
    double cur = 1.0 + model.max_discount_at(t + 1) * next;
    if (cur > best) best = cur;
    next = cur;
  }
  return model.reward_bound() * best;
}

}  // namespace nvmdp
