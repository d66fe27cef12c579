#include "nvmdp/bench.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nvmdp {

Selector selector_for_algorithm(const std::string& algorithm,
                                const ExperimentConfig& cfg) {
  Selector sel;
  sel.lambda = cfg.lambda;
  sel.eta = cfg.eta;
  if (algorithm == "nvmdp-q") {
    sel.kind = SelectorKind::max_of_first;
    sel.n = 1;
    sel.l = 1;
  } else if (algorithm == "maxmin-q") {
    sel.kind = SelectorKind::maxmin;
    sel.n = cfg.n;
    sel.l = cfg.l;
  } else if (algorithm == "ptmxm-q") {
    sel.kind = SelectorKind::ptmxm;
    sel.n = cfg.n;
    sel.l = cfg.l;
  } else if (algorithm == "averaged-q") {
    sel.kind = SelectorKind::averaged;
    sel.n = cfg.n;
    sel.l = cfg.l;
  } else if (algorithm == "wtavg-q") {
    sel.kind = SelectorKind::wtavg;
    sel.n = cfg.n;
    sel.l = cfg.l;
  } else if (algorithm == "classic-q") {
    throw ValidationError("classic-q keeps a single fixed-discount table and has no selector");
  } else {
    throw ValidationError("unknown algorithm '" + algorithm +
                          "' (expected classic-q, nvmdp-q, maxmin-q, ptmxm-q, "
                          "averaged-q or wtavg-q)");
  }
  sel.validate();
  return sel;
}

TabularNvmdp gridworld_for_config(const ExperimentConfig& cfg) {
  return build_tricky_gridworld(reward_scheme_from_string(cfg.reward_scheme),
                                discount_scheme_from_string(cfg.discount_scheme));
}

namespace {

LearningConfig learning_config_for_trial(const ExperimentConfig& cfg, int trial) {
  LearningConfig lc;
  lc.epsilon = cfg.epsilon;
  lc.alpha = cfg.alpha;
  lc.tapering = cfg.tapering;
  lc.episodes = cfg.episodes;
  lc.eval_every = cfg.eval_every;
  lc.seed = Rng::derive_seed(cfg.master_seed, static_cast<std::uint64_t>(trial));
  lc.convergence_steps = cfg.convergence_steps;
  lc.classic_gamma = cfg.classic_gamma;
  GridworldSpec spec;
  lc.watched_states = spec.discount_boost_states();
  return lc;
}

}  // namespace

RunRecord run_single_trial(const TabularNvmdp& model, const ExperimentConfig& cfg,
                           int trial) {
  if (trial < 0 || trial >= cfg.trials) {
    throw ValidationError("trial index out of range");
  }
  const LearningConfig lc = learning_config_for_trial(cfg, trial);
  RunRecord rec;
  if (cfg.algorithm == "classic-q") {
    rec = classic_q_baseline(model, lc);
  } else {
    rec = train(model, selector_for_algorithm(cfg.algorithm, cfg), lc);
  }
  rec.algorithm = cfg.algorithm;
  rec.reward_scheme = cfg.reward_scheme;
  rec.discount_scheme = cfg.discount_scheme;
  rec.noise_method = model.has_reward_sampler() ? "inverse-cdf" : "none";
  return rec;
}

std::vector<RunRecord> run_trials(const TabularNvmdp& model,
                                  const ExperimentConfig& cfg) {
  if (cfg.trials < 0) throw ValidationError("trial count must be nonnegative");
  // Validate the cell up front so config errors surface before any worker
  // starts (exceptions must not cross the parallel region below), and so a
  // zero-trial run still rejects a bad algorithm name.
  if (cfg.algorithm != "classic-q") selector_for_algorithm(cfg.algorithm, cfg);
  if (cfg.trials == 0) return {};

  std::vector<RunRecord> records(static_cast<size_t>(cfg.trials));
  // Trials are independent streams, so they can run in any order on any
  // number of workers; slotting results by index keeps the output
  // deterministic either way.
  std::string failure;
#ifdef _OPENMP
  const int threads = cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
  for (int k = 0; k < cfg.trials; ++k) {
    try {
      records[static_cast<size_t>(k)] = run_single_trial(model, cfg, k);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      failure = e.what();
    }
  }
  if (!failure.empty()) throw ValidationError("trial failed: " + failure);
  return records;
}

BenchmarkRow aggregate_records(const std::vector<RunRecord>& records) {
  if (records.empty()) throw ValidationError("cannot aggregate zero records");
  BenchmarkRow row;
  row.algorithm = records.front().algorithm;
  row.reward_scheme = records.front().reward_scheme;
  row.discount_scheme = records.front().discount_scheme;
  if (row.algorithm == "classic-q") {
    row.parameters = "-";
  } else {
    std::ostringstream os;
    os << "n=" << records.front().n << ",l=" << records.front().l;
    row.parameters = os.str();
  }
  row.trials = static_cast<int>(records.size());
  double ep_sum = 0.0, step_sum = 0.0, std_sum = 0.0;
  for (const RunRecord& r : records) {
    if (r.converged) {
      ++row.converged_count;
      ep_sum += static_cast<double>(r.convergence_episode);
    }
    if (r.avoidance_hit) ++row.avoidance_count;
    step_sum += static_cast<double>(r.steps);
    std_sum += r.pre_convergence_return_std;
  }
  if (row.converged_count > 0) {
    row.has_mean_episode = true;
    row.mean_convergence_episode = ep_sum / row.converged_count;
  }
  row.mean_steps_thousands = step_sum / row.trials / 1000.0;
  row.mean_pre_convergence_std = std_sum / row.trials;
  return row;
}

std::string run_record_to_json(const RunRecord& rec) {
  nlohmann::json j;
  j["algorithm"] = rec.algorithm;
  j["n"] = rec.n;
  j["l"] = rec.l;
  j["reward_scheme"] = rec.reward_scheme;
  j["discount_scheme"] = rec.discount_scheme;
  j["seed"] = rec.seed;
  j["converged"] = rec.converged;
  j["convergence_episode"] = rec.convergence_episode;
  j["steps"] = rec.steps;
  j["pre_convergence_return_std"] = rec.pre_convergence_return_std;
  j["final_trajectory"] = rec.final_trajectory;
  j["avoidance_hit"] = rec.avoidance_hit;
  j["noise_method"] = rec.noise_method;
  return j.dump();
}

void write_records_jsonl(const std::vector<RunRecord>& records,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const RunRecord& r : records) out << run_record_to_json(r) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

std::vector<RunRecord> read_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::vector<RunRecord> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      RunRecord r;
      r.algorithm = j.at("algorithm").get<std::string>();
      r.n = j.at("n").get<int>();
      r.l = j.at("l").get<int>();
      r.reward_scheme = j.at("reward_scheme").get<std::string>();
      r.discount_scheme = j.at("discount_scheme").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.converged = j.at("converged").get<bool>();
      r.convergence_episode = j.at("convergence_episode").get<long>();
      r.steps = j.at("steps").get<long>();
      r.pre_convergence_return_std = j.at("pre_convergence_return_std").get<double>();
      r.final_trajectory = j.at("final_trajectory").get<std::vector<int>>();
      r.avoidance_hit = j.at("avoidance_hit").get<bool>();
      r.noise_method = j.value("noise_method", std::string("none"));
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": record is missing fields: " + e.what());
    }
  }
  return records;
}

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "Algorithm,Parameters,Reward,Discount,Episodes,Steps(1e3),std,Count\n";
  for (const BenchmarkRow& r : rows) {
    out << r.algorithm << "," << r.parameters << "," << r.reward_scheme << ","
        << r.discount_scheme << ","
        << (r.has_mean_episode ? format_double(r.mean_convergence_episode) : "--")
        << "," << format_double(r.mean_steps_thousands) << ","
        << format_double(r.mean_pre_convergence_std) << "," << r.avoidance_count
        << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

void emit_plot_data(const std::vector<RunRecord>& records, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  // index.csv lists every curve file; with no records it is just the header,
  // so downstream tooling always finds something to read.
  const std::string index_path = dir + "/index.csv";
  std::ofstream index(index_path);
  if (!index) throw IoError("cannot open " + index_path + " for writing");
  index << "file,algorithm,n,l,reward,discount,seed\n";
  for (size_t k = 0; k < records.size(); ++k) {
    const RunRecord& r = records[k];
    std::ostringstream base;
    base << "curve_" << r.algorithm << "_n" << r.n << "l" << r.l << "_"
         << r.reward_scheme << "_" << r.discount_scheme << "_trial" << k << ".csv";
    const std::string name = dir + "/" + base.str();
    std::ofstream out(name);
    if (!out) throw IoError("cannot open " + name + " for writing");
    out << "episode,return,steps\n";
    char buf[40];
    for (size_t m = 0; m < r.eval_episodes.size(); ++m) {
      std::snprintf(buf, sizeof buf, "%.17g", r.eval_returns[m]);
      out << r.eval_episodes[m] << "," << buf << "," << r.eval_steps[m] << "\n";
    }
    if (!out) throw IoError("failed writing " + name);
    index << base.str() << "," << r.algorithm << "," << r.n << "," << r.l << ","
          << r.reward_scheme << "," << r.discount_scheme << "," << r.seed << "\n";
  }
  if (!index) throw IoError("failed writing " + index_path);
}

}  // namespace nvmdp
