// Command-line front end. Six subcommands:
//
//   dp-eval   exact evaluation of a fixed policy on an environment
//   dp-vi     optimal values + greedy rollout by backward induction
//   qlearn    one model-free training run, record written as JSONL
//   bench     multi-trial benchmark cell, JSONL records + CSV row
//   verify    numerical check suites over random small instances
//   dump-env  environment (and optionally its matrix view) to files
//
// Exit codes: 0 success, 1 usage, 2 validation failure, 3 I/O failure.
// qlearn, bench and verify accept --config FILE, a JSON object whose keys
// are the long option names; explicitly passed flags override file values.
// NVMDP_SEED, when set, supplies --seed for qlearn/bench/verify.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nvmdp/bench.hpp"
#include "nvmdp/dp.hpp"
#include "nvmdp/envs.hpp"
#include "nvmdp/errors.hpp"
#include "nvmdp/matrixrep.hpp"
#include "nvmdp/model.hpp"
#include "nvmdp/qlearn.hpp"
#include "nvmdp/verify.hpp"

namespace {

using nlohmann::json;
using namespace nvmdp;

std::string fmt_g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

bool is_named_gridworld(const std::string& env) {
  return env == "tricky" || env == "vanilla";
}

// --env takes "tricky", "vanilla" or a path to an NVMDP JSON file. The
// scheme flags only matter for "tricky"; the other sources carry their own
// rewards and discounts.
TabularNvmdp resolve_env(const std::string& env, const std::string& reward,
                         const std::string& discount) {
  if (env == "tricky") {
    return build_tricky_gridworld(reward_scheme_from_string(reward),
                                  discount_scheme_from_string(discount));
  }
  if (env == "vanilla") return build_vanilla_gridworld();
  return load_nvmdp_json(env);
}

int argmax_lowest(const double* row, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

struct CliRollout {
  std::vector<int> states;
  int steps = 0;
  bool reached = false;
  double ret = 0.0;
};

// Deterministic greedy rollout: start at the most likely start state, follow
// the policy's greedy action, step to the most likely successor (which is
// the unique one on the gridworlds), accumulate the mean-reward return with
// its running discount product.
CliRollout greedy_rollout(const TabularNvmdp& m, const TimePolicy& pol) {
  CliRollout out;
  int s = argmax_lowest(m.start_distribution().data(), m.num_states());
  out.states.push_back(s);
  double gamma_prod = 1.0;
  for (int t = 0; t < m.horizon(); ++t) {
    if (m.is_terminal(s)) break;
    const int a = pol.greedy_action(t, s);
    const int s2 = argmax_lowest(m.transition_row(t, s, a), m.num_states());
    out.ret += gamma_prod * m.mean_reward(t, s, a, s2);
    gamma_prod *= m.discount(t + 1, s, a, s2);
    s = s2;
    out.states.push_back(s);
    ++out.steps;
  }
  out.reached = m.is_terminal(s);
  return out;
}

std::string states_csv(const std::vector<int>& states) {
  std::ostringstream os;
  for (size_t i = 0; i < states.size(); ++i) {
    if (i) os << ",";
    os << states[i];
  }
  return os.str();
}

std::string states_cells(const std::vector<int>& states) {
  const GridworldSpec spec;
  std::ostringstream os;
  for (size_t i = 0; i < states.size(); ++i) {
    if (i) os << "->";
    const auto [x, y] = spec.cell_xy(states[i]);
    os << "(" << x << "," << y << ")";
  }
  return os.str();
}

// --config support: a JSON object whose keys are long option names. Values
// fill in exactly the options the user did not pass on the command line.
class ConfigMerger {
 public:
  template <class T>
  void bind(CLI::Option* opt, const std::string& key, T* target) {
    entries_.push_back(Entry{key, opt, [target, key](const json& v) {
                               try {
                                 *target = v.get<T>();
                               } catch (const json::exception&) {
                                 throw ValidationError("config key '" + key +
                                                       "' has the wrong type");
                               }
                             }});
  }

  void merge(const std::string& path) const {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw IoError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) {
      throw ValidationError("config file " + path + " must hold a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      const Entry* hit = nullptr;
      for (const Entry& e : entries_) {
        if (e.key == it.key()) {
          hit = &e;
          break;
        }
      }
      if (hit == nullptr) {
        throw ValidationError("config file has unknown key '" + it.key() + "'");
      }
      if (hit->opt->count() > 0) continue;  // explicit flag wins
      hit->apply(it.value());
    }
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<void(const json&)> apply;
  };
  std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// dp-eval / dp-vi

struct DpOptions {
  std::string env = "tricky";
  std::string reward = "deterministic";
  std::string discount = "dr-0";
  std::string policy = "uniform";
  std::string out;
};

void add_env_options(CLI::App* cmd, DpOptions& o) {
  cmd->add_option("--env", o.env,
                  "Environment: tricky, vanilla, or a path to an NVMDP JSON file");
  cmd->add_option("--reward", o.reward,
                  "Reward scheme for --env tricky: deterministic, r-lvn, r-svn");
  cmd->add_option("--discount", o.discount,
                  "Discount scheme for --env tricky: dr-0, dr-1, dr-2, dr-3");
}

void run_dp_eval(const DpOptions& o) {
  const TabularNvmdp model = resolve_env(o.env, o.reward, o.discount);
  TimePolicy pol = TimePolicy::uniform(model.horizon(), model.num_states(),
                                       model.num_actions());
  if (o.policy == "optimal") {
    pol = value_iteration(model).greedy;
  } else if (o.policy != "uniform") {
    throw ValidationError("unknown --policy '" + o.policy +
                          "' (expected uniform or optimal)");
  }
  const DpResult res = policy_evaluation(model, pol);

  double v_start = 0.0;
  for (int s = 0; s < model.num_states(); ++s) {
    v_start += model.start_distribution()[static_cast<size_t>(s)] * res.v.at(0, s);
  }
  double v_min = std::numeric_limits<double>::infinity();
  double v_max = -std::numeric_limits<double>::infinity();
  for (double x : res.v.data) {
    v_min = std::min(v_min, x);
    v_max = std::max(v_max, x);
  }
  std::cout << "env=" << o.env << " policy=" << o.policy
            << " horizon=" << model.horizon() << " states=" << model.num_states()
            << " actions=" << model.num_actions() << "\n";
  std::cout << "v_start=" << fmt_g(v_start) << "\n";
  std::cout << "v_min=" << fmt_g(v_min) << "\n";
  std::cout << "v_max=" << fmt_g(v_max) << "\n";
  if (!o.out.empty()) {
    write_text_file(o.out, dp_result_to_json(res));
    std::cout << "tables=" << o.out << "\n";
  }
}

void run_dp_vi(const DpOptions& o) {
  const TabularNvmdp model = resolve_env(o.env, o.reward, o.discount);
  const DpResult res = value_iteration(model);
  const CliRollout roll = greedy_rollout(model, res.greedy);

  double v_start = 0.0;
  for (int s = 0; s < model.num_states(); ++s) {
    v_start += model.start_distribution()[static_cast<size_t>(s)] * res.v.at(0, s);
  }
  std::cout << "env=" << o.env << " reward=" << o.reward
            << " discount=" << o.discount << " horizon=" << model.horizon()
            << "\n";
  std::cout << "v_start=" << fmt_g(v_start) << "\n";
  std::cout << "rollout_steps=" << roll.steps << "\n";
  std::cout << "rollout_reached=" << (roll.reached ? 1 : 0) << "\n";
  std::cout << "rollout_return=" << fmt_g(roll.ret) << "\n";
  std::cout << "rollout_states=" << states_csv(roll.states) << "\n";
  if (is_named_gridworld(o.env)) {
    std::cout << "rollout_cells=" << states_cells(roll.states) << "\n";
  }
  if (!o.out.empty()) {
    write_text_file(o.out, dp_result_to_json(res));
    std::cout << "tables=" << o.out << "\n";
  }
}

// ---------------------------------------------------------------------------
// qlearn

struct QlearnOptions {
  std::string algorithm = "nvmdp-q";
  int n = 1;
  int l = 1;
  std::string env = "tricky";
  std::string reward = "deterministic";
  std::string discount = "dr-0";
  long episodes = 50000;
  long eval_every = 500;
  double epsilon = 0.05;
  double alpha = 0.1;
  double lambda = 0.5;
  double eta = 0.7;
  std::uint64_t seed = 1;
  bool tapering = false;
  double classic_gamma = 0.999;
  int convergence_steps = 12;
  std::string out = "qlearn_records.jsonl";
  std::string plots;
  std::string config;
};

void run_qlearn(const QlearnOptions& o) {
  const TabularNvmdp model = resolve_env(o.env, o.reward, o.discount);

  LearningConfig lc;
  lc.epsilon = o.epsilon;
  lc.alpha = o.alpha;
  lc.tapering = o.tapering;
  lc.episodes = o.episodes;
  lc.eval_every = o.eval_every;
  lc.seed = o.seed;
  lc.convergence_steps = o.convergence_steps;
  lc.classic_gamma = o.classic_gamma;
  if (is_named_gridworld(o.env)) {
    lc.watched_states = GridworldSpec{}.discount_boost_states();
  }

  RunRecord rec;
  if (o.algorithm == "classic-q") {
    rec = classic_q_baseline(model, lc);
  } else {
    ExperimentConfig param_holder;
    param_holder.n = o.n;
    param_holder.l = o.l;
    param_holder.lambda = o.lambda;
    param_holder.eta = o.eta;
    rec = train(model, selector_for_algorithm(o.algorithm, param_holder), lc);
  }
  rec.algorithm = o.algorithm;
  if (is_named_gridworld(o.env)) {
    rec.reward_scheme = o.env == "tricky" ? o.reward : "deterministic";
    rec.discount_scheme = o.env == "tricky" ? o.discount : "dr-0";
  } else {
    rec.reward_scheme = "custom";
    rec.discount_scheme = "custom";
  }
  rec.noise_method = model.has_reward_sampler() ? "inverse-cdf" : "none";

  const std::vector<RunRecord> records{rec};
  write_records_jsonl(records, o.out);
  if (!o.plots.empty()) emit_plot_data(records, o.plots);

  std::cout << "algorithm=" << rec.algorithm << " seed=" << rec.seed << "\n";
  std::cout << "converged=" << (rec.converged ? 1 : 0) << "\n";
  std::cout << "convergence_episode=" << rec.convergence_episode << "\n";
  std::cout << "steps=" << rec.steps << "\n";
  std::cout << "pre_convergence_return_std=" << fmt_g(rec.pre_convergence_return_std)
            << "\n";
  std::cout << "avoidance_hit=" << (rec.avoidance_hit ? 1 : 0) << "\n";
  std::cout << "records=" << o.out << "\n";
  if (!o.plots.empty()) std::cout << "plots=" << o.plots << "\n";
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  ExperimentConfig cfg;
  std::string out = "bench_records.jsonl";
  std::string csv;
  std::string plots;
  std::string config;
};

void run_bench(const BenchOptions& o) {
  const TabularNvmdp model = gridworld_for_config(o.cfg);
  const std::vector<RunRecord> records = run_trials(model, o.cfg);
  write_records_jsonl(records, o.out);
  if (!o.plots.empty()) emit_plot_data(records, o.plots);

  std::vector<BenchmarkRow> rows;
  if (!records.empty()) rows.push_back(aggregate_records(records));
  if (!o.csv.empty()) write_benchmark_csv(rows, o.csv);

  if (rows.empty()) {
    std::cout << "trials=0 (no records)\n";
  } else {
    const BenchmarkRow& r = rows.front();
    std::cout << "algorithm=" << r.algorithm << " parameters=" << r.parameters
              << " reward=" << r.reward_scheme << " discount=" << r.discount_scheme
              << "\n";
    std::cout << "trials=" << r.trials << "\n";
    std::cout << "converged_trials=" << r.converged_count << "\n";
    std::cout << "mean_convergence_episode="
              << (r.has_mean_episode ? fmt_g(r.mean_convergence_episode)
                                     : std::string("--"))
              << "\n";
    std::cout << "mean_steps_thousands=" << fmt_g(r.mean_steps_thousands) << "\n";
    std::cout << "mean_pre_convergence_std=" << fmt_g(r.mean_pre_convergence_std)
              << "\n";
    std::cout << "avoidance_count=" << r.avoidance_count << "\n";
  }
  std::cout << "records=" << o.out << "\n";
  if (!o.csv.empty()) std::cout << "csv=" << o.csv << "\n";
  if (!o.plots.empty()) std::cout << "plots=" << o.plots << "\n";
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
  std::string suite = "all";
  int seeds = 20;
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
};

int draw_size(Rng& rng, int lo, int hi) { return lo + rng.uniform_int(hi - lo + 1); }

TabularNvmdp random_small_instance(Rng& rng) {
  const double gamma_max = 0.2 + rng.uniform01();
  const int S = draw_size(rng, 2, 4);
  const int A = draw_size(rng, 2, 3);
  const int H = draw_size(rng, 2, 5);
  return random_nvmdp(rng, S, A, H, gamma_max);
}

struct SuiteOutcome {
  json report;
  bool pass = false;
};

SuiteOutcome gradient_suite(int instances, std::uint64_t seed) {
  double worst_rel = 0.0;
  double worst_form_gap = 0.0;
  const double h = 1e-5;
  for (int i = 0; i < instances; ++i) {
    Rng rng = Rng::for_stream(seed, 100 + static_cast<std::uint64_t>(i));
    const TabularNvmdp model = random_small_instance(rng);
    SoftmaxPolicyParams params = SoftmaxPolicyParams::random(
        rng, model.horizon(), model.num_states(), model.num_actions(), 0.7);
    const int t = rng.uniform_int(model.horizon());
    const int s = rng.uniform_int(model.num_states());

    const std::vector<double> ga = exact_policy_gradient(model, params, t, s, true);
    const std::vector<double> gq = exact_policy_gradient(model, params, t, s, false);
    for (size_t k = 0; k < ga.size(); ++k) {
      worst_form_gap = std::max(worst_form_gap, std::fabs(ga[k] - gq[k]));
    }

    double gnorm = 1.0;
    for (double g : ga) gnorm = std::max(gnorm, std::fabs(g));
    SoftmaxPolicyParams probe = params;
    for (size_t k = 0; k < ga.size(); ++k) {
      probe.logits[k] = params.logits[k] + h;
      const double vp = policy_evaluation(model, probe.to_policy()).v.at(t, s);
      probe.logits[k] = params.logits[k] - h;
      const double vm = policy_evaluation(model, probe.to_policy()).v.at(t, s);
      probe.logits[k] = params.logits[k];
      const double fd = (vp - vm) / (2.0 * h);
      worst_rel = std::max(worst_rel, std::fabs(ga[k] - fd) / gnorm);
    }
  }
  SuiteOutcome out;
  out.pass = worst_rel < 1e-5 && worst_form_gap < 1e-9;
  out.report = {{"instances", instances},
                {"worst_rel_error", worst_rel},
                {"worst_form_gap", worst_form_gap},
                {"tolerance", 1e-5},
                {"pass", out.pass}};
  return out;
}

SuiteOutcome perfdiff_suite(int instances, std::uint64_t seed) {
  double worst_residual = 0.0;
  double worst_ratio_gap = 0.0;
  double worst_self = 0.0;
  for (int i = 0; i < instances; ++i) {
    Rng rng = Rng::for_stream(seed, 200 + static_cast<std::uint64_t>(i));
    const TabularNvmdp model = random_small_instance(rng);
    const TimePolicy pi1 =
        SoftmaxPolicyParams::random(rng, model.horizon(), model.num_states(),
                                    model.num_actions(), 1.0)
            .to_policy();
    const TimePolicy pi2 =
        SoftmaxPolicyParams::random(rng, model.horizon(), model.num_states(),
                                    model.num_actions(), 1.0)
            .to_policy();
    const int t = rng.uniform_int(model.horizon());
    const int s = rng.uniform_int(model.num_states());

    const PerfDiffReport rep = performance_difference(model, pi1, pi2, t, s);
    worst_residual = std::max(worst_residual, rep.residual);

    const double d_direct = policy_advantage_D(model, pi1, pi2, t, s, false);
    const double d_ratio = policy_advantage_D(model, pi1, pi2, t, s, true);
    worst_ratio_gap = std::max(worst_ratio_gap, std::fabs(d_direct - d_ratio));
    worst_self =
        std::max(worst_self, std::fabs(policy_advantage_D(model, pi1, pi1, t, s)));
  }
  SuiteOutcome out;
  out.pass = worst_residual < 1e-9 && worst_ratio_gap < 1e-10 && worst_self < 1e-12;
  out.report = {{"instances", instances},
                {"worst_residual", worst_residual},
                {"worst_ratio_gap", worst_ratio_gap},
                {"worst_self_D", worst_self},
                {"tolerance", 1e-9},
                {"pass", out.pass}};
  return out;
}

SuiteOutcome trpo_suite(int instances, std::uint64_t seed) {
  const int per_instance = instances > 0 ? (500 + instances - 1) / instances : 0;
  long pairs = 0;
  long violations = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();
  double worst_alpha_asym = 0.0;
  bool alpha_range_ok = true;
  for (int i = 0; i < instances; ++i) {
    Rng rng = Rng::for_stream(seed, 300 + static_cast<std::uint64_t>(i));
    const TabularNvmdp model = random_small_instance(rng);
    for (int p = 0; p < per_instance; ++p) {
      const double scale = 0.2 + 1.8 * rng.uniform01();
      const TimePolicy pi1 =
          SoftmaxPolicyParams::random(rng, model.horizon(), model.num_states(),
                                      model.num_actions(), scale)
              .to_policy();
      const TimePolicy pi2 =
          SoftmaxPolicyParams::random(rng, model.horizon(), model.num_states(),
                                      model.num_actions(), scale)
              .to_policy();
      const int t = rng.uniform_int(model.horizon());
      const TrpoReport rep = trpo_bound_check(model, pi1, pi2, t);
      const TrpoReport rev = trpo_bound_check(model, pi2, pi1, t);
      ++pairs;
      if (!rep.ok) ++violations;
      worst_margin = std::max(worst_margin, rep.worst_residual - rep.bound);
      worst_alpha_asym =
          std::max(worst_alpha_asym, std::fabs(rep.alpha - rev.alpha));
      if (rep.alpha < 0.0 || rep.alpha > 1.0 + 1e-12) alpha_range_ok = false;
    }
  }
  SuiteOutcome out;
  out.pass = violations == 0 && worst_alpha_asym <= 1e-12 && alpha_range_ok;
  out.report = {{"instances", instances},
                {"pairs", pairs},
                {"violations", violations},
                {"worst_margin", worst_margin},
                {"worst_alpha_asymmetry", worst_alpha_asym},
                {"alpha_range_ok", alpha_range_ok},
                {"pass", out.pass}};
  return out;
}

SuiteOutcome shaping_suite(int instances, std::uint64_t seed) {
  double worst_dev = 0.0;
  bool argmax_equal = true;
  for (int i = 0; i < instances; ++i) {
    Rng rng = Rng::for_stream(seed, 400 + static_cast<std::uint64_t>(i));
    const TabularNvmdp model = random_small_instance(rng);
    const int S = model.num_states();
    const int A = model.num_actions();
    const int H = model.horizon();

    std::vector<double> phi(static_cast<size_t>(H + 1) * S);
    for (double& x : phi) x = 4.0 * rng.uniform01() - 2.0;
    for (int t = 0; t <= H; ++t) {
      for (int s = 0; s < S; ++s) {
        if (model.is_terminal(s)) phi[static_cast<size_t>(t) * S + s] = 0.0;
      }
    }

    const DpResult base = value_iteration(model);
    const TabularNvmdp shaped_model = reward_shaping_transform(model, phi);
    const DpResult shaped = value_iteration(shaped_model);

    for (int t = 0; t < H; ++t) {
      for (int s = 0; s < S; ++s) {
        const double shift = phi[static_cast<size_t>(t) * S + s];
        double m1 = -std::numeric_limits<double>::infinity();
        double m2 = m1;
        for (int a = 0; a < A; ++a) {
          worst_dev = std::max(
              worst_dev,
              std::fabs(shaped.q.at(t, s, a) - (base.q.at(t, s, a) - shift)));
          m1 = std::max(m1, base.q.at(t, s, a));
          m2 = std::max(m2, shaped.q.at(t, s, a));
        }
        for (int a = 0; a < A; ++a) {
          const bool in1 = base.q.at(t, s, a) >= m1 - 1e-7;
          const bool in2 = shaped.q.at(t, s, a) >= m2 - 1e-7;
          if (in1 != in2) argmax_equal = false;
        }
      }
    }
  }
  SuiteOutcome out;
  out.pass = worst_dev < 1e-9 && argmax_equal;
  out.report = {{"instances", instances},
                {"worst_q_shift_dev", worst_dev},
                {"argmax_sets_equal", argmax_equal},
                {"tolerance", 1e-9},
                {"pass", out.pass}};
  return out;
}

SuiteOutcome matrix_suite(int instances, std::uint64_t seed) {
  double worst_recursion = 0.0;
  double worst_pi_u = 0.0;
  for (int i = 0; i < instances; ++i) {
    Rng rng = Rng::for_stream(seed, 500 + static_cast<std::uint64_t>(i));
    const TabularNvmdp model = random_small_instance(rng);
    const TimePolicy pol =
        SoftmaxPolicyParams::random(rng, model.horizon(), model.num_states(),
                                    model.num_actions(), 1.0)
            .to_policy();
    const DpResult res = policy_evaluation(model, pol);
    const RecursionReport rep = value_recursion_check(model, pol, res.v, res.q);
    worst_recursion = std::max(worst_recursion, rep.max_residual());

    const int t = rng.uniform_int(model.horizon());
    const MatrixBundle b = build_bundle(model, pol, t);
    const double dev =
        (b.Pi * b.U - Mat::Identity(model.num_states(), model.num_states()))
            .cwiseAbs()
            .maxCoeff();
    worst_pi_u = std::max(worst_pi_u, dev);
  }
  SuiteOutcome out;
  out.pass = worst_recursion < 1e-9 && worst_pi_u <= 1e-12;
  out.report = {{"instances", instances},
                {"worst_recursion_residual", worst_recursion},
                {"worst_pi_u_identity_dev", worst_pi_u},
                {"tolerance", 1e-9},
                {"pass", out.pass}};
  return out;
}

SuiteOutcome selectors_suite(std::uint64_t seed) {
  const long pairs = 10000;
  struct Case {
    const char* label;
    Selector sel;
  };
  std::vector<Case> cases;
  cases.push_back({"max-of-first", Selector{SelectorKind::max_of_first, 1, 1}});
  cases.push_back({"averaged", Selector{SelectorKind::averaged, 2, 3}});
  cases.push_back({"maxmin", Selector{SelectorKind::maxmin, 2, 3}});
  cases.push_back({"wtavg", Selector{SelectorKind::wtavg, 2, 3, 0.5, 0.7}});
  cases.push_back({"ptmxm", Selector{SelectorKind::ptmxm, 2, 3}});

  json per;
  bool all_ok = true;
  for (size_t i = 0; i < cases.size(); ++i) {
    const SelectorSuiteReport rep = selector_assumption_suite(
        cases[i].sel, pairs, Rng::derive_seed(seed, 600 + i));
    per[cases[i].label] = {{"constant_ok", rep.constant_ok},
                           {"nonexpansive_ok", rep.nonexpansive_ok},
                           {"worst_constant_dev", rep.worst_constant_dev},
                           {"worst_excess", rep.worst_excess},
                           {"pass", rep.pass()}};
    if (!rep.pass()) all_ok = false;
  }

  const SelectorSuiteReport broken = selector_assumption_suite(
      Selector{SelectorKind::broken_double_max, 2, 3}, pairs,
      Rng::derive_seed(seed, 699));
  const bool broken_rejected = !broken.pass();
  per["broken-double-max"] = {{"constant_ok", broken.constant_ok},
                              {"nonexpansive_ok", broken.nonexpansive_ok},
                              {"worst_excess", broken.worst_excess},
                              {"rejected", broken_rejected}};

  SuiteOutcome out;
  out.pass = all_ok && broken_rejected;
  out.report = {{"pairs", pairs},
                {"selectors", per},
                {"broken_rejected", broken_rejected},
                {"pass", out.pass}};
  return out;
}

int run_verify(const VerifyOptions& o) {
  if (o.seeds <= 0) throw ValidationError("--seeds must be positive");
  const std::vector<std::string> all{"gradient", "perfdiff", "trpo",
                                     "shaping",  "matrix",   "selectors"};
  std::vector<std::string> chosen;
  if (o.suite == "all") {
    chosen = all;
  } else if (std::find(all.begin(), all.end(), o.suite) != all.end()) {
    chosen.push_back(o.suite);
  } else {
    throw ValidationError("unknown --suite '" + o.suite +
                          "' (expected gradient, perfdiff, trpo, shaping, "
                          "matrix, selectors or all)");
  }

  json suites;
  bool all_pass = true;
  for (const std::string& name : chosen) {
    SuiteOutcome so;
    if (name == "gradient") so = gradient_suite(o.seeds, o.seed);
    if (name == "perfdiff") so = perfdiff_suite(o.seeds, o.seed);
    if (name == "trpo") so = trpo_suite(o.seeds, o.seed);
    if (name == "shaping") so = shaping_suite(o.seeds, o.seed);
    if (name == "matrix") so = matrix_suite(o.seeds, o.seed);
    if (name == "selectors") so = selectors_suite(o.seed);
    suites[name] = so.report;
    if (!so.pass) all_pass = false;
    std::cout << "suite=" << name << " pass=" << (so.pass ? 1 : 0) << "\n";
  }

  json report = {{"seed", o.seed},
                 {"seeds", o.seeds},
                 {"suites", suites},
                 {"pass", all_pass}};
  if (!o.out.empty()) {
    write_text_file(o.out, report.dump(2) + "\n");
    std::cout << "report=" << o.out << "\n";
  } else {
    std::cout << report.dump(2) << "\n";
  }
  std::cout << "verify_pass=" << (all_pass ? 1 : 0) << "\n";
  return all_pass ? 0 : 2;
}

// ---------------------------------------------------------------------------
// dump-env

struct DumpOptions {
  std::string env = "tricky";
  std::string reward = "deterministic";
  std::string discount = "dr-0";
  std::string out;
  std::string matrix_dir;
  int matrix_t = 0;
  std::string matrix_policy = "uniform";
};

void run_dump_env(const DumpOptions& o) {
  const TabularNvmdp model = resolve_env(o.env, o.reward, o.discount);
  dump_nvmdp_json(model, o.out);
  std::cout << "env=" << o.out << "\n";
  if (!o.matrix_dir.empty()) {
    TimePolicy pol = TimePolicy::uniform(model.horizon(), model.num_states(),
                                         model.num_actions());
    if (o.matrix_policy == "optimal") {
      pol = value_iteration(model).greedy;
    } else if (o.matrix_policy != "uniform") {
      throw ValidationError("unknown --matrix-policy '" + o.matrix_policy +
                            "' (expected uniform or optimal)");
    }
    const MatrixBundle b = build_bundle(model, pol, o.matrix_t);
    dump_bundle_csv(b, o.matrix_dir);
    std::cout << "matrices=" << o.matrix_dir << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular solver, learner and verifier for finite-horizon MDPs "
               "with time-dependent dynamics and transition-dependent discounts"};
  app.require_subcommand(1);
  int rc = 0;

  // dp-eval
  auto dpe = std::make_shared<DpOptions>();
  {
    CLI::App* cmd = app.add_subcommand("dp-eval", "Evaluate a fixed policy exactly");
    add_env_options(cmd, *dpe);
    cmd->add_option("--policy", dpe->policy, "Policy to evaluate: uniform or optimal");
    cmd->add_option("--out", dpe->out, "Write value/action-value tables as JSON");
    cmd->callback([dpe]() { run_dp_eval(*dpe); });
  }

  // dp-vi
  auto dpv = std::make_shared<DpOptions>();
  {
    CLI::App* cmd =
        app.add_subcommand("dp-vi", "Optimal values and greedy rollout");
    add_env_options(cmd, *dpv);
    cmd->add_option("--out", dpv->out, "Write value/action-value tables as JSON");
    cmd->callback([dpv]() { run_dp_vi(*dpv); });
  }

  // qlearn
  auto ql = std::make_shared<QlearnOptions>();
  auto ql_merge = std::make_shared<ConfigMerger>();
  {
    CLI::App* cmd = app.add_subcommand("qlearn", "One model-free training run");
    ql_merge->bind(cmd->add_option("--algorithm", ql->algorithm,
                                   "classic-q, nvmdp-q, maxmin-q, ptmxm-q, "
                                   "averaged-q or wtavg-q"),
                   "algorithm", &ql->algorithm);
    ql_merge->bind(cmd->add_option("--n", ql->n, "Estimate tracks"), "n", &ql->n);
    ql_merge->bind(cmd->add_option("--l", ql->l, "History slots per track"), "l",
                   &ql->l);
    ql_merge->bind(cmd->add_option("--env", ql->env,
                                   "tricky, vanilla, or an NVMDP JSON file"),
                   "env", &ql->env);
    ql_merge->bind(cmd->add_option("--reward", ql->reward,
                                   "deterministic, r-lvn or r-svn"),
                   "reward", &ql->reward);
    ql_merge->bind(cmd->add_option("--discount", ql->discount, "dr-0 .. dr-3"),
                   "discount", &ql->discount);
    ql_merge->bind(cmd->add_option("--episodes", ql->episodes, "Training episodes"),
                   "episodes", &ql->episodes);
    ql_merge->bind(
        cmd->add_option("--eval-every", ql->eval_every, "Evaluation cadence"),
        "eval-every", &ql->eval_every);
    ql_merge->bind(cmd->add_option("--epsilon", ql->epsilon, "Exploration rate"),
                   "epsilon", &ql->epsilon);
    ql_merge->bind(cmd->add_option("--alpha", ql->alpha, "Constant stepsize"),
                   "alpha", &ql->alpha);
    ql_merge->bind(cmd->add_option("--lambda", ql->lambda, "wtavg history decay"),
                   "lambda", &ql->lambda);
    ql_merge->bind(cmd->add_option("--eta", ql->eta, "wtavg own-track weight"),
                   "eta", &ql->eta);
    ql_merge->bind(cmd->add_option("--seed", ql->seed, "Run seed")
                       ->envname("NVMDP_SEED"),
                   "seed", &ql->seed);
    ql_merge->bind(cmd->add_flag("--tapering", ql->tapering,
                                 "1/visit-count stepsizes instead of --alpha"),
                   "tapering", &ql->tapering);
    ql_merge->bind(cmd->add_option("--classic-gamma", ql->classic_gamma,
                                   "Fixed discount for classic-q"),
                   "classic-gamma", &ql->classic_gamma);
    ql_merge->bind(cmd->add_option("--convergence-steps", ql->convergence_steps,
                                   "Greedy rollout length that counts as solved"),
                   "convergence-steps", &ql->convergence_steps);
    ql_merge->bind(cmd->add_option("--out", ql->out, "JSONL record path"), "out",
                   &ql->out);
    ql_merge->bind(cmd->add_option("--plots", ql->plots,
                                   "Directory for evaluation-curve CSVs"),
                   "plots", &ql->plots);
    cmd->add_option("--config", ql->config,
                    "JSON file of option values; flags override it");
    cmd->callback([ql, ql_merge]() {
      if (!ql->config.empty()) ql_merge->merge(ql->config);
      run_qlearn(*ql);
    });
  }

  // bench
  auto bn = std::make_shared<BenchOptions>();
  auto bn_merge = std::make_shared<ConfigMerger>();
  {
    CLI::App* cmd =
        app.add_subcommand("bench", "Multi-trial benchmark cell on the windy grid");
    ExperimentConfig& c = bn->cfg;
    bn_merge->bind(cmd->add_option("--algorithm", c.algorithm,
                                   "classic-q, nvmdp-q, maxmin-q, ptmxm-q, "
                                   "averaged-q or wtavg-q"),
                   "algorithm", &c.algorithm);
    bn_merge->bind(cmd->add_option("--n", c.n, "Estimate tracks"), "n", &c.n);
    bn_merge->bind(cmd->add_option("--l", c.l, "History slots per track"), "l",
                   &c.l);
    bn_merge->bind(cmd->add_option("--reward", c.reward_scheme,
                                   "deterministic, r-lvn or r-svn"),
                   "reward", &c.reward_scheme);
    bn_merge->bind(cmd->add_option("--discount", c.discount_scheme, "dr-0 .. dr-3"),
                   "discount", &c.discount_scheme);
    bn_merge->bind(cmd->add_option("--trials", c.trials, "Independent trials"),
                   "trials", &c.trials);
    bn_merge->bind(cmd->add_option("--episodes", c.episodes, "Episodes per trial"),
                   "episodes", &c.episodes);
    bn_merge->bind(
        cmd->add_option("--eval-every", c.eval_every, "Evaluation cadence"),
        "eval-every", &c.eval_every);
    bn_merge->bind(cmd->add_option("--epsilon", c.epsilon, "Exploration rate"),
                   "epsilon", &c.epsilon);
    bn_merge->bind(cmd->add_option("--alpha", c.alpha, "Constant stepsize"),
                   "alpha", &c.alpha);
    bn_merge->bind(cmd->add_option("--lambda", c.lambda, "wtavg history decay"),
                   "lambda", &c.lambda);
    bn_merge->bind(cmd->add_option("--eta", c.eta, "wtavg own-track weight"),
                   "eta", &c.eta);
    bn_merge->bind(cmd->add_option("--seed", c.master_seed,
                                   "Master seed; trial k derives its own stream")
                       ->envname("NVMDP_SEED"),
                   "seed", &c.master_seed);
    bn_merge->bind(cmd->add_option("--jobs", c.jobs,
                                   "Worker threads for trials (0 = all cores)"),
                   "jobs", &c.jobs);
    bn_merge->bind(cmd->add_flag("--tapering", c.tapering,
                                 "1/visit-count stepsizes instead of --alpha"),
                   "tapering", &c.tapering);
    bn_merge->bind(cmd->add_option("--classic-gamma", c.classic_gamma,
                                   "Fixed discount for classic-q"),
                   "classic-gamma", &c.classic_gamma);
    bn_merge->bind(cmd->add_option("--convergence-steps", c.convergence_steps,
                                   "Greedy rollout length that counts as solved"),
                   "convergence-steps", &c.convergence_steps);
    bn_merge->bind(cmd->add_option("--out", bn->out, "JSONL records path"), "out",
                   &bn->out);
    bn_merge->bind(cmd->add_option("--csv", bn->csv, "Benchmark table CSV path"),
                   "csv", &bn->csv);
    bn_merge->bind(cmd->add_option("--plots", bn->plots,
                                   "Directory for evaluation-curve CSVs"),
                   "plots", &bn->plots);
    cmd->add_option("--config", bn->config,
                    "JSON file of option values; flags override it");
    cmd->callback([bn, bn_merge]() {
      if (!bn->config.empty()) bn_merge->merge(bn->config);
      run_bench(*bn);
    });
  }

  // verify
  auto vf = std::make_shared<VerifyOptions>();
  auto vf_merge = std::make_shared<ConfigMerger>();
  {
    CLI::App* cmd = app.add_subcommand(
        "verify", "Numerical check suites over random small instances");
    vf_merge->bind(cmd->add_option("--suite", vf->suite,
                                   "gradient, perfdiff, trpo, shaping, matrix, "
                                   "selectors or all"),
                   "suite", &vf->suite);
    vf_merge->bind(cmd->add_option("--seeds", vf->seeds, "Random instances per suite"),
                   "seeds", &vf->seeds);
    vf_merge->bind(cmd->add_option("--seed", vf->seed, "Master seed")
                       ->envname("NVMDP_SEED"),
                   "seed", &vf->seed);
    vf_merge->bind(cmd->add_option("--out", vf->out, "JSON report path"), "out",
                   &vf->out);
    cmd->add_option("--config", vf->config,
                    "JSON file of option values; flags override it");
    cmd->callback([vf, vf_merge, &rc]() {
      if (!vf->config.empty()) vf_merge->merge(vf->config);
      rc = run_verify(*vf);
    });
  }

  // dump-env
  auto de = std::make_shared<DumpOptions>();
  {
    CLI::App* cmd =
        app.add_subcommand("dump-env", "Write an environment as an NVMDP JSON file");
    cmd->add_option("--env", de->env, "tricky, vanilla, or an NVMDP JSON file");
    cmd->add_option("--reward", de->reward, "deterministic, r-lvn or r-svn");
    cmd->add_option("--discount", de->discount, "dr-0 .. dr-3");
    cmd->add_option("--out", de->out, "Output JSON path")->required();
    cmd->add_option("--matrix-dir", de->matrix_dir,
                    "Also dump the epoch-t matrix view as CSVs here");
    cmd->add_option("--matrix-t", de->matrix_t, "Epoch for --matrix-dir");
    cmd->add_option("--matrix-policy", de->matrix_policy,
                    "Policy in the matrix view: uniform or optimal");
    cmd->callback([de]() { run_dump_env(*de); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
