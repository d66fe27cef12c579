#include "nvmdp/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nvmdp {

std::string to_string(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::max_of_first: return "max-of-first";
    case SelectorKind::averaged: return "averaged";
    case SelectorKind::maxmin: return "maxmin";
    case SelectorKind::wtavg: return "wtavg";
    case SelectorKind::ptmxm: return "ptmxm";
    case SelectorKind::broken_double_max: return "broken-double-max";
  }
  return "?";
}

void Selector::validate() const {
  if (n < 1 || l < 1) throw ValidationError("selector needs n >= 1 tracks and l >= 1 slots");
  if (kind == SelectorKind::max_of_first && (n != 1 || l != 1)) {
    throw ValidationError("max-of-first is defined for a single estimate (n = l = 1)");
  }
  if (kind == SelectorKind::wtavg) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
      throw ValidationError("wtavg lambda must lie strictly between 0 and 1");
    }
    if (!(eta > 0.0 && eta < 1.0)) {
      throw ValidationError("wtavg eta must lie strictly between 0 and 1");
    }
  }
}

std::vector<double> Selector::history_weights() const {
  std::vector<double> w(static_cast<size_t>(l));
  if (std::abs(1.0 - lambda) < 1e-12) {
    std::fill(w.begin(), w.end(), 1.0 / l);
    return w;
  }
  // lambda^j, j = 0..l-1, normalized by the geometric sum.
  double scale = (1.0 - lambda) / (1.0 - std::pow(lambda, l));
  double p = 1.0;
  for (int j = 0; j < l; ++j) {
    w[static_cast<size_t>(j)] = scale * p;
    p *= lambda;
  }
  return w;
}

EstimateTensor::EstimateTensor(int horizon, int num_states, int num_actions,
                               int tracks, int history)
    : H_(horizon), S_(num_states), A_(num_actions), n_(tracks), l_(history),
      data_(static_cast<size_t>(horizon + 1) * num_states * num_actions * tracks *
                history,
            0.0) {
  if (H_ <= 0 || S_ <= 0 || A_ <= 0 || n_ <= 0 || l_ <= 0) {
    throw ValidationError("estimate tensor dimensions must be positive");
  }
}

void EstimateTensor::shift_history(int t, int s, int a, int i) {
  double* slot = &data_[idx(t, s, a, i, 0)];
  for (int j = l_ - 1; j >= 1; --j) slot[j] = slot[j - 1];
}

namespace {

// Slice layout helper: entry for (a, i, j) in an [a][track][slot] block.
inline double slot_at(const double* q, int n, int l, int a, int i, int j) {
  return q[(static_cast<size_t>(a) * n + i) * l + j];
}

inline int argmax_lowest(const double* x, int count) {
  int best = 0;
  for (int k = 1; k < count; ++k) {
    if (x[k] > x[best]) best = k;
  }
  return best;
}

}  // namespace

double selector_apply(const Selector& sel, const double* q, int num_actions,
                      int track) {
  const int n = sel.n, l = sel.l, A = num_actions;
  switch (sel.kind) {
    case SelectorKind::max_of_first: {
      double best = slot_at(q, n, l, 0, 0, 0);
      for (int a = 1; a < A; ++a) best = std::max(best, slot_at(q, n, l, a, 0, 0));
      return best;
    }
    case SelectorKind::averaged: {
      double best = -HUGE_VAL;
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < l; ++j) sum += slot_at(q, n, l, a, i, j);
        }
        best = std::max(best, sum / (n * l));
      }
      return best;
    }
    case SelectorKind::maxmin: {
      double best = -HUGE_VAL;
      for (int a = 0; a < A; ++a) {
        double lo = HUGE_VAL;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < l; ++j) lo = std::min(lo, slot_at(q, n, l, a, i, j));
        }
        best = std::max(best, lo);
      }
      return best;
    }
    case SelectorKind::ptmxm: {
      double best = -HUGE_VAL;
      for (int a = 0; a < A; ++a) {
        double lo = HUGE_VAL;
        for (int j = 0; j < l; ++j) lo = std::min(lo, slot_at(q, n, l, a, track, j));
        best = std::max(best, lo);
      }
      return best;
    }
    case SelectorKind::wtavg: {
      const std::vector<double> w = sel.history_weights();
      double best = -HUGE_VAL;
      for (int a = 0; a < A; ++a) {
        double own = 0.0, others = 0.0;
        for (int i = 0; i < n; ++i) {
          double hist = 0.0;
          for (int j = 0; j < l; ++j) {
            hist += w[static_cast<size_t>(j)] * slot_at(q, n, l, a, i, j);
          }
          if (i == track) {
            own = hist;
          } else {
            others += hist;
          }
        }
        double score = n > 1 ? sel.eta * own + (1.0 - sel.eta) * others / (n - 1)
                             : own;
        best = std::max(best, score);
      }
      return best;
    }
    case SelectorKind::broken_double_max: {
      double hi = -HUGE_VAL;
      for (int a = 0; a < A; ++a) {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < l; ++j) hi = std::max(hi, slot_at(q, n, l, a, i, j));
        }
      }
      return 2.0 * hi;
    }
  }
  throw ValidationError("unknown selector kind");
}

void selector_action_scores(const Selector& sel, const double* q, int num_actions,
                            double* scores) {
  const int n = sel.n, l = sel.l, A = num_actions;
  switch (sel.kind) {
    case SelectorKind::max_of_first:
      for (int a = 0; a < A; ++a) scores[a] = slot_at(q, n, l, a, 0, 0);
      return;
    case SelectorKind::averaged:
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < l; ++j) sum += slot_at(q, n, l, a, i, j);
        }
        scores[a] = sum / (n * l);
      }
      return;
    case SelectorKind::maxmin:
      for (int a = 0; a < A; ++a) {
        double lo = HUGE_VAL;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < l; ++j) lo = std::min(lo, slot_at(q, n, l, a, i, j));
        }
        scores[a] = lo;
      }
      return;
    case SelectorKind::ptmxm:
      // Per-track pessimism, averaged over which track is looking.
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
          double lo = HUGE_VAL;
          for (int j = 0; j < l; ++j) lo = std::min(lo, slot_at(q, n, l, a, i, j));
          sum += lo;
        }
        scores[a] = sum / n;
      }
      return;
    case SelectorKind::wtavg: {
      // The per-track blends averaged over tracks collapse to the plain
      // track average of the weighted histories, so that is what gets
      // computed.
      const std::vector<double> w = sel.history_weights();
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < l; ++j) {
            sum += w[static_cast<size_t>(j)] * slot_at(q, n, l, a, i, j);
          }
        }
        scores[a] = sum / n;
      }
      return;
    }
    case SelectorKind::broken_double_max:
      for (int a = 0; a < A; ++a) {
        double hi = -HUGE_VAL;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < l; ++j) hi = std::max(hi, slot_at(q, n, l, a, i, j));
        }
        scores[a] = 2.0 * hi;
      }
      return;
  }
  throw ValidationError("unknown selector kind");
}

void run_episode(const TabularNvmdp& model, const Selector& sel,
                 const LearningConfig& cfg, EstimateTensor& q, Rng& rng,
                 std::vector<long>* visit_counts, EpisodeStats& stats) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  std::vector<double> scores(static_cast<size_t>(A));
  int s = model.sample_start(rng);
  for (int t = 0; t < H; ++t) {
    if (model.is_terminal(s)) break;
    int a;
    if (rng.uniform01() < cfg.epsilon) {
      a = rng.uniform_int(A);
    } else {
      selector_action_scores(sel, q.slice(t, s), A, scores.data());
      a = argmax_lowest(scores.data(), A);
    }
    const int s2 = model.sample_next(t, s, a, rng);
    const double r = model.sample_reward(t, s, a, s2, rng);
    const int i = rng.uniform_int(sel.n);

    const double g = model.discount(t + 1, s, a, s2);
    const double boot = g != 0.0 ? selector_apply(sel, q.slice(t + 1, s2), A, i) : 0.0;
    const double target = r + g * boot;

    q.shift_history(t, s, a, i);
    double alpha = cfg.alpha;
    if (cfg.tapering) {
      long& c = (*visit_counts)[(static_cast<size_t>(t) * S + s) * A + a];
      alpha = 1.0 / static_cast<double>(++c);
    }
    double& cell = q.at(t, s, a, i, 0);
    cell += alpha * (target - cell);

    ++stats.steps;
    s = s2;
  }
}

namespace {

struct EvalRollout {
  std::vector<int> states;
  double ret = 0.0;
  int steps = 0;
  bool reached = false;
};

// Greedy rollout under a per-epoch action scorer, scored with mean rewards
// (no observation noise) and the model's own discount accumulation.
template <typename Scorer>
EvalRollout greedy_rollout(const TabularNvmdp& model, Scorer&& score, Rng& rng) {
  const int H = model.horizon(), A = model.num_actions();
  std::vector<double> scores(static_cast<size_t>(A));
  EvalRollout out;
  int s = model.sample_start(rng);
  out.states.push_back(s);
  double carry = 1.0;
  for (int t = 0; t < H; ++t) {
    if (model.is_terminal(s)) break;
    score(t, s, scores.data());
    const int a = argmax_lowest(scores.data(), A);
    const int s2 = model.sample_next(t, s, a, rng);
    out.ret += carry * model.mean_reward(t, s, a, s2);
    carry *= model.discount(t + 1, s, a, s2);
    s = s2;
    out.states.push_back(s);
    ++out.steps;
  }
  out.reached = model.is_terminal(s);
  return out;
}

// Retrospective convergence scan plus the derived statistics.
void finalize_record(RunRecord& rec, const LearningConfig& cfg,
                     const EvalRollout& final_rollout) {
  size_t k = rec.eval_steps.size();
  while (k > 0 && rec.eval_steps[k - 1] == cfg.convergence_steps) --k;
  if (k < rec.eval_steps.size()) {
    rec.converged = true;
    rec.convergence_episode = rec.eval_episodes[k];
  }
  const size_t pre = rec.converged ? k : rec.eval_returns.size();
  if (pre >= 2) {
    double mean = 0.0;
    for (size_t m = 0; m < pre; ++m) mean += rec.eval_returns[m];
    mean /= static_cast<double>(pre);
    double ss = 0.0;
    for (size_t m = 0; m < pre; ++m) {
      const double d = rec.eval_returns[m] - mean;
      ss += d * d;
    }
    rec.pre_convergence_return_std = std::sqrt(ss / static_cast<double>(pre - 1));
  }
  rec.final_trajectory = final_rollout.states;
  rec.avoidance_hit = false;
  for (int s : rec.final_trajectory) {
    if (std::find(cfg.watched_states.begin(), cfg.watched_states.end(), s) !=
        cfg.watched_states.end()) {
      rec.avoidance_hit = true;
      break;
    }
  }
}

// Stream ids under the per-run seed: behavior updates use 0, the k-th
// periodic evaluation uses EVAL_STREAM_BASE + k, the final rollout
// FINAL_STREAM. Evaluation never touches the behavior stream, so adding or
// removing evaluations cannot change what is learned.
constexpr std::uint64_t EVAL_STREAM_BASE = 1000000;
constexpr std::uint64_t FINAL_STREAM = 2000000;

}  // namespace

namespace {

void validate_learning_config(const LearningConfig& cfg) {
  if (cfg.episodes < 0 || cfg.eval_every <= 0) {
    throw ValidationError("episodes must be nonnegative and eval_every positive");
  }
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) {
    throw ValidationError("epsilon must lie in [0, 1]");
  }
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
    throw ValidationError("alpha must lie in [0, 1]");
  }
}

}  // namespace

RunRecord train(const TabularNvmdp& model, const Selector& sel,
                const LearningConfig& cfg) {
  sel.validate();
  validate_learning_config(cfg);
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  EstimateTensor q(H, S, A, sel.n, sel.l);
  Rng behavior = Rng::for_stream(cfg.seed, 0);
  std::vector<long> visits;
  if (cfg.tapering) visits.assign(static_cast<size_t>(H) * S * A, 0);

  RunRecord rec;
  rec.algorithm = to_string(sel.kind);
  rec.n = sel.n;
  rec.l = sel.l;
  rec.seed = cfg.seed;

  auto scorer = [&q, &sel, A](int t, int s, double* out) {
    selector_action_scores(sel, q.slice(t, s), A, out);
  };

  EpisodeStats stats;
  long evals = 0;
  for (long ep = 1; ep <= cfg.episodes; ++ep) {
    run_episode(model, sel, cfg, q, behavior, cfg.tapering ? &visits : nullptr, stats);
    if (ep % cfg.eval_every == 0) {
      Rng eval_rng = Rng::for_stream(cfg.seed, EVAL_STREAM_BASE + evals);
      EvalRollout ro = greedy_rollout(model, scorer, eval_rng);
      rec.eval_episodes.push_back(ep);
      rec.eval_returns.push_back(ro.ret);
      rec.eval_steps.push_back(ro.reached ? ro.steps : -1);
      ++evals;
    }
  }
  rec.steps = stats.steps;

  Rng final_rng = Rng::for_stream(cfg.seed, FINAL_STREAM);
  finalize_record(rec, cfg, greedy_rollout(model, scorer, final_rng));
  return rec;
}

RunRecord classic_q_baseline(const TabularNvmdp& model, const LearningConfig& cfg) {
  validate_learning_config(cfg);
  if (!(cfg.classic_gamma >= 0.0)) {
    throw ValidationError("classic_gamma must be nonnegative");
  }
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  std::vector<double> q(static_cast<size_t>(S) * A, 0.0);
  std::vector<long> visits;
  if (cfg.tapering) visits.assign(q.size(), 0);
  Rng behavior = Rng::for_stream(cfg.seed, 0);

  RunRecord rec;
  rec.algorithm = "classic-q";
  rec.seed = cfg.seed;

  auto scorer = [&q, A](int /*t*/, int s, double* out) {
    const double* row = &q[static_cast<size_t>(s) * A];
    std::copy(row, row + A, out);
  };

  EpisodeStats stats;
  std::vector<double> scores(static_cast<size_t>(A));
  long evals = 0;
  for (long ep = 1; ep <= cfg.episodes; ++ep) {
    int s = model.sample_start(behavior);
    for (int t = 0; t < H; ++t) {
      if (model.is_terminal(s)) break;
      int a;
      if (behavior.uniform01() < cfg.epsilon) {
        a = behavior.uniform_int(A);
      } else {
        scorer(t, s, scores.data());
        a = argmax_lowest(scores.data(), A);
      }
      const int s2 = model.sample_next(t, s, a, behavior);
      const double r = model.sample_reward(t, s, a, s2, behavior);
      const double* next = &q[static_cast<size_t>(s2) * A];
      const double boot =
          model.is_terminal(s2) ? 0.0 : *std::max_element(next, next + A);
      double alpha = cfg.alpha;
      if (cfg.tapering) {
        long& c = visits[static_cast<size_t>(s) * A + a];
        alpha = 1.0 / static_cast<double>(++c);
      }
      double& cell = q[static_cast<size_t>(s) * A + a];
      cell += alpha * (r + cfg.classic_gamma * boot - cell);
      ++stats.steps;
      s = s2;
    }
    if (ep % cfg.eval_every == 0) {
      Rng eval_rng = Rng::for_stream(cfg.seed, EVAL_STREAM_BASE + evals);
      EvalRollout ro = greedy_rollout(model, scorer, eval_rng);
      rec.eval_episodes.push_back(ep);
      rec.eval_returns.push_back(ro.ret);
      rec.eval_steps.push_back(ro.reached ? ro.steps : -1);
      ++evals;
    }
  }
  rec.steps = stats.steps;

  Rng final_rng = Rng::for_stream(cfg.seed, FINAL_STREAM);
  finalize_record(rec, cfg, greedy_rollout(model, scorer, final_rng));
  return rec;
}

SelectorSuiteReport selector_assumption_suite(const Selector& sel, long pairs,
                                              std::uint64_t seed) {
  sel.validate();
  if (pairs <= 0) throw ValidationError("pair count must be positive");
  Rng rng(seed);
  SelectorSuiteReport rep;
  rep.pairs = pairs;
  const double tol = 1e-12;

  std::vector<double> q1, q2, qc;
  for (long p = 0; p < pairs; ++p) {
    const int A = 2 + rng.uniform_int(4);
    const size_t len = static_cast<size_t>(A) * sel.n * sel.l;
    q1.resize(len);
    q2.resize(len);
    qc.resize(len);
    for (size_t k = 0; k < len; ++k) {
      q1[k] = -5.0 + 10.0 * rng.uniform01();
      q2[k] = q1[k] + (-2.0 + 4.0 * rng.uniform01());
    }
    const double c = -5.0 + 10.0 * rng.uniform01();
    std::fill(qc.begin(), qc.end(), c);

    double dist = 0.0;
    for (size_t k = 0; k < len; ++k) dist = std::max(dist, std::abs(q1[k] - q2[k]));

    for (int i = 0; i < sel.n; ++i) {
      const double dev = std::abs(selector_apply(sel, qc.data(), A, i) - c);
      rep.worst_constant_dev = std::max(rep.worst_constant_dev, dev);
      if (dev > tol && rep.constant_ok) {
        rep.constant_ok = false;
        std::ostringstream os;
        os << "pair " << p << ", track " << i << ": constant " << c
           << " mapped " << dev << " away from itself";
        rep.witness = os.str();
      }

      const double d =
          std::abs(selector_apply(sel, q1.data(), A, i) -
                   selector_apply(sel, q2.data(), A, i));
      const double excess = d - dist;
      rep.worst_excess = std::max(rep.worst_excess, excess);
      if (excess > tol && rep.nonexpansive_ok) {
        rep.nonexpansive_ok = false;
        std::ostringstream os;
        os << "pair " << p << ", track " << i << ": outputs moved " << d
           << " apart, inputs only " << dist;
        rep.witness = os.str();
      }
    }
  }
  return rep;
}

}  // namespace nvmdp
