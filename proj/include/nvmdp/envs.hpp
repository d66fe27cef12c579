#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nvmdp/model.hpp"

namespace nvmdp {

// Reward schemes for the benchmark gridworld. All three have the same mean
// reward of -10 per step; the noisy variants add zero-mean Gaussian noise to
// each observed reward. CLI names: "deterministic", "r-lvn", "r-svn".
enum class RewardScheme { deterministic, lvn, svn };

// Discount schemes. dr-0 is a flat 0.999. The others raise the discount on
// transitions into two specific cells above 1, permanently (dr-1) or only
// during the first 50 epochs (dr-2 at 1.02, dr-3 at 1.05). A discount above
// 1 makes lingering near those cells look attractive to any learner that
// mistakes the transient boost for a permanent one. CLI names: "dr-0".."dr-3".
enum class DiscountScheme { dr0, dr1, dr2, dr3 };

RewardScheme reward_scheme_from_string(const std::string& name);
DiscountScheme discount_scheme_from_string(const std::string& name);
std::string to_string(RewardScheme s);
std::string to_string(DiscountScheme s);

/**
 * Geometry and dynamics of the benchmark gridworld, kept as an explicit
 * struct so tests can probe the pieces (wind table, cell indexing, single
 * deterministic step) without going through the materialized model.
 *
 * Cells are addressed (x, y) with x in 1..width left to right and y in
 * 1..height bottom to top. State index = (y-1)*width + (x-1). The target
 * cell is the single terminal state: entering it ends the trajectory (the
 * entering transition still pays its reward; nothing is collected after).
 *
 * Dynamics per epoch t in cell (x, y): wind first, action second. The wind
 * depends on the column the agent starts the epoch in and on t mod 6:
 *
 *     column 5: pushed 2 cells left, except when t % 6 == 0
 *     column 6: pushed 3 cells left, except when t % 6 is 1..4
 *     column 7: pushed 4 cells left, except when t % 6 == 5
 *
 * so each windy column has a calm window once per 6 epochs, and the windows
 * are staggered. The action (up 0, down 1, left 2, right 3) then moves one
 * cell from the post-wind position; moves off the edge stay in place.
 * Reaching the target therefore requires threading the calm windows with
 * epoch-aware play, which is exactly what a time-indexed learner can
 * represent and a fixed-table learner cannot.
 */
struct GridworldSpec {
  int width = 8;
  int height = 3;
  int start_x = 1, start_y = 1;
  int target_x = 8, target_y = 3;
  int horizon = 200;
  bool windy = true;
  RewardScheme reward_scheme = RewardScheme::deterministic;
  DiscountScheme discount_scheme = DiscountScheme::dr0;

  int num_states() const { return width * height; }
  int num_actions() const { return 4; }

  int cell_index(int x, int y) const { return (y - 1) * width + (x - 1); }
  std::pair<int, int> cell_xy(int s) const {
    return {s % width + 1, s / width + 1};
  }
  int start_state() const { return cell_index(start_x, start_y); }
  int target_state() const { return cell_index(target_x, target_y); }

  /// Cells whose entering discount exceeds 1 under dr-1/dr-2/dr-3.
  std::vector<int> discount_boost_states() const;

  /// Leftward wind displacement for an agent starting epoch t in column x.
  int wind_shift(int x, int t) const;

  /// Deterministic successor cell for (state, action) at epoch t.
  int next_state(int s, int a, int t) const;

  /// Reward noise standard deviation for the configured scheme.
  double noise_sigma() const;

  /// Discount on the transition into s_next, carried back from epoch t1 = t+1.
  double gamma(int t1, int s_next) const;
};

/// Materializes a GridworldSpec into a model.
TabularNvmdp build_gridworld(const GridworldSpec& spec);

/// The windy 8x3 benchmark with the given reward and discount schemes.
TabularNvmdp build_tricky_gridworld(RewardScheme reward, DiscountScheme discount);

/// Wind-free 8x3 control: deterministic rewards, flat 0.999 discount.
/// Its shortest start-to-target path takes 9 moves.
TabularNvmdp build_vanilla_gridworld();

/**
 * Loads a model from the JSON interchange format (see README for the
 * schema). Per-(t, s, a) probability rows whose sum is off by more than
 * 1e-9 are rejected with the offending coordinates in the message; rows
 * within that tolerance are renormalized. Parse failures raise IoError,
 * semantic problems raise ValidationError.
 */
TabularNvmdp load_nvmdp_json(const std::string& path);

/// Serializes a model to the same JSON format (dense, mean rewards only).
void dump_nvmdp_json(const TabularNvmdp& model, const std::string& path);
std::string nvmdp_to_json(const TabularNvmdp& model);

/**
 * Random dense instance: Dirichlet(1,..,1) transition and start rows, mean
 * rewards uniform on [-1, 1], discounts uniform on [0, gamma_max], no
 * terminal states, reward bound 1. Non-stationary (every epoch drawn
 * independently). Draw order is fixed, so instances are reproducible.
 */
TabularNvmdp random_nvmdp(Rng& rng, int num_states, int num_actions, int horizon,
                          double gamma_max);

/// Same construction but one slice replicated across epochs, so the instance
/// is stationary up to the horizon embedding.
TabularNvmdp random_stationary_nvmdp(Rng& rng, int num_states, int num_actions,
                                     int horizon, double gamma_max);

}  // namespace nvmdp
