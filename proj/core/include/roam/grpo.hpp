// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roam/policy_model.hpp"
#include "roam/response_parser.hpp"
#include "roam/reward.hpp"
#include "roam/task.hpp"

namespace roam {

struct GrpoConfig {
  std::size_t group_size = 8;
  std::size_t batch_size = 8;
  std::size_t total_steps = 1000;
  double clip_eps = 0.2;
  double kl_coef = 0.04;
  double learning_rate = 0.1;
  double std_floor = 1e-6;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const GrpoConfig&, const GrpoConfig&) = default;
};

class GroupTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DecisionStep {
  std::size_t action = 0;
  double logp_old = 0.0;
  double logp_ref = 0.0;
};

struct ResponseRecord {
  std::vector<DecisionStep> steps;
  double reward = 0.0;
  StructuredResponse structured;
};

/// G responses to one query, sampled under the old policy.
struct GroupRollout {
  Task query;
  std::vector<ResponseRecord> members;
};

struct LossBreakdown {
  double surrogate = 0.0;
  double kl = 0.0;
  double objective = 0.0;  // surrogate - kl_coef * kl
};

/// z-scored rewards within a group: (r - mean) / max(population std, floor).
/// Throws GroupTooSmall for fewer than two rewards.
std::vector<double> compute_group_advantages(std::span<const double> rewards,
                                             double std_floor);

inline double policy_ratio(double logp_new, double logp_old) {
  return std::exp(logp_new - logp_old);
}

/// min(ratio * A, clamp(ratio, 1 - eps, 1 + eps) * A).
double clipped_surrogate(double ratio, double advantage, double eps);

/// Per-step KL estimate rho - log(rho) - 1 with rho = pi_ref / pi_new.
double kl_penalty(double logp_ref, double logp_new);

/// Mean over groups of (1/G) sum_i (1/|O_i|) sum_t (M_it - beta * KL_it),
/// with ratios and KL terms recomputed under `params` and `ref_params`.
LossBreakdown grpo_objective(std::span<const GroupRollout> batch,
                             const PolicyModel& policy, std::span<const double> params,
                             std::span<const double> ref_params, const GrpoConfig& cfg);

/// Exact gradient of grpo_objective().objective with respect to `params`.
std::vector<double> grpo_gradient(std::span<const GroupRollout> batch,
                                  const PolicyModel& policy, std::span<const double> params,
                                  std::span<const double> ref_params, const GrpoConfig& cfg);

/// Objective and gradient in one pass.
LossBreakdown grpo_objective_and_gradient(std::span<const GroupRollout> batch,
                                          const PolicyModel& policy,
                                          std::span<const double> params,
                                          std::span<const double> ref_params,
                                          const GrpoConfig& cfg, std::span<double> grad);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

using RewardFunction = std::function<double(const StructuredResponse&, const Task&)>;

/// roam_score(...).total or classical_score(...) against the task's key.
RewardFunction make_reward_function(RewardMode mode, const RewardLadder& ladder = {});

struct TrainingStepRecord {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double consistency_rate = 0.0;
  double objective = 0.0;
  double surrogate = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
  std::string param_checksum;

  friend bool operator==(const TrainingStepRecord&, const TrainingStepRecord&) = default;
};

using TrainingTrace = std::vector<TrainingStepRecord>;

/// FNV-1a 64 over the IEEE-754 bytes of `params`, as 16 hex digits.
std::string param_checksum(std::span<const double> params);

/// Samples the rollouts for one step under `old_params`. Randomness for
/// (step, slot, member) comes from its own keyed stream.
std::vector<GroupRollout> collect_rollouts(const GrpoConfig& cfg, std::size_t step,
                                           std::span<const Task> tasks,
                                           const PolicyModel& policy,
                                           std::span<const double> old_params,
                                           std::span<const double> ref_params,
                                           const RewardFunction& reward);

/// Plain gradient ascent on the GRPO objective. `params` is updated in
/// place; the reference policy is `params` as passed in. One old-policy
/// snapshot per step. Throws NonFiniteLoss and leaves `params` at the last
/// finite state if a step produces a non-finite value.
TrainingTrace train_loop(const GrpoConfig& cfg, std::span<const Task> tasks,
                         const PolicyModel& policy, std::vector<double>& params,
                         const RewardFunction& reward,
                         const std::function<void(const TrainingStepRecord&)>& on_step = {});

}  // namespace roam
