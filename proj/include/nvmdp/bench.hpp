#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nvmdp/envs.hpp"
#include "nvmdp/qlearn.hpp"

namespace nvmdp {

/**
 * One experiment cell: an algorithm on a gridworld scheme pair, repeated
 * over independent trials. Trial k runs with seed derive_seed(master_seed,
 * k), so a cell is reproducible from the master seed alone and trials are
 * independent streams. The supported algorithm names are classic-q,
 * nvmdp-q (single time-indexed table), maxmin-q, ptmxm-q, averaged-q and
 * wtavg-q; the last four read n and l, wtavg-q also lambda and eta.
 */
struct ExperimentConfig {
  std::string algorithm = "nvmdp-q";
  int n = 1;
  int l = 1;
  std::string reward_scheme = "deterministic";
  std::string discount_scheme = "dr-0";
  int trials = 10;
  long episodes = 50000;
  long eval_every = 500;
  double epsilon = 0.05;
  double alpha = 0.1;
  double lambda = 0.5;
  double eta = 0.7;
  std::uint64_t master_seed = 1;
  int jobs = 1;  // worker threads for trials; results do not depend on it
  bool tapering = false;
  double classic_gamma = 0.999;
  int convergence_steps = 12;
};

/// Maps an algorithm name to its selector. classic-q has no selector and is
/// rejected here; run_trials dispatches it to the baseline directly.
Selector selector_for_algorithm(const std::string& algorithm,
                                const ExperimentConfig& cfg);

/// Builds the gridworld named by the config's scheme fields.
TabularNvmdp gridworld_for_config(const ExperimentConfig& cfg);

/// Runs one trial (0-based index) of the configured cell.
RunRecord run_single_trial(const TabularNvmdp& model, const ExperimentConfig& cfg,
                           int trial);

/// Runs all trials, in parallel when cfg.jobs allows, returning records in
/// trial order regardless of scheduling.
std::vector<RunRecord> run_trials(const TabularNvmdp& model,
                                  const ExperimentConfig& cfg);

/**
 * Aggregate of one cell's records, one table row. Episodes is the mean
 * convergence episode over converged trials only (absent when none
 * converged); Steps is the mean of total training steps over all trials,
 * in thousands; std is the mean pre-convergence return standard deviation;
 * Count is the number of trials whose final greedy trajectory passed
 * through a watched cell, converged or not.
 */
struct BenchmarkRow {
  std::string algorithm;
  std::string parameters;
  std::string reward_scheme;
  std::string discount_scheme;
  int trials = 0;
  int converged_count = 0;
  int avoidance_count = 0;
  bool has_mean_episode = false;
  double mean_convergence_episode = 0.0;
  double mean_steps_thousands = 0.0;
  double mean_pre_convergence_std = 0.0;
};
BenchmarkRow aggregate_records(const std::vector<RunRecord>& records);

/// One record as a single-line JSON object (the JSONL row format).
std::string run_record_to_json(const RunRecord& rec);

/// Writes records as JSONL, one object per line, in the given order.
void write_records_jsonl(const std::vector<RunRecord>& records,
                         const std::string& path);

/// Reads records back from JSONL (evaluation curves are not serialized and
/// come back empty).
std::vector<RunRecord> read_records_jsonl(const std::string& path);

/// Writes benchmark rows as CSV with a fixed header.
void write_benchmark_csv(const std::vector<BenchmarkRow>& rows,
                         const std::string& path);

/// Writes one evaluation-curve CSV per record into dir (episode, return,
/// steps per evaluation), named by the record's cell and trial index, plus
/// an index.csv manifest listing them. With no records the manifest is
/// still written, header only.
void emit_plot_data(const std::vector<RunRecord>& records, const std::string& dir);

}  // namespace nvmdp
