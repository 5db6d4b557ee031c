// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#include "roam/grpo.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <string>

namespace roam {
namespace {

enum : std::uint64_t { kBatchStream = 11, kMemberStream = 12 };

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteLoss(std::string("non-finite ") + what);
}

}  // namespace

void GrpoConfig::validate() const {
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(group_size >= 2, "group_size must be at least 2");
  require(batch_size >= 1, "batch_size must be positive");
  require(std::isfinite(clip_eps) && clip_eps > 0.0, "clip_eps must be > 0");
  require(std::isfinite(kl_coef) && kl_coef >= 0.0, "kl_coef must be >= 0");
  require(std::isfinite(learning_rate) && learning_rate >= 0.0,
          "learning_rate must be >= 0");
  require(std::isfinite(std_floor) && std_floor > 0.0, "std_floor must be > 0");
}

std::vector<double> compute_group_advantages(std::span<const double> rewards,
                                             double std_floor) {
  if (rewards.size() < 2) {
    throw GroupTooSmall("group-relative advantages need at least 2 responses, got " +
                        std::to_string(rewards.size()));
  }
  // Deviations are taken from rewards[0] first so that equal rewards give
  // exactly zero rather than a rounding residue divided by the floor.
  const double n = static_cast<double>(rewards.size());
  const double pivot = rewards[0];
  double shift = 0.0;
  for (double r : rewards) shift += r - pivot;
  shift /= n;
  std::vector<double> adv(rewards.size());
  double var = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    adv[i] = (rewards[i] - pivot) - shift;
    var += adv[i] * adv[i];
  }
  const double scale = std::max(std::sqrt(var / n), std_floor);
  for (double& a : adv) a /= scale;
  return adv;
}

double clipped_surrogate(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double kl_penalty(double logp_ref, double logp_new) {
  const double log_rho = logp_ref - logp_new;
  // expm1 keeps rho - log(rho) - 1 accurate (and exactly 0) near rho = 1.
  return std::expm1(log_rho) - log_rho;
}

LossBreakdown grpo_objective_and_gradient(std::span<const GroupRollout> batch,
                                          const PolicyModel& policy,
                                          std::span<const double> params,
                                          std::span<const double> ref_params,
                                          const GrpoConfig& cfg, std::span<double> grad) {
  const std::size_t np = policy.num_params();
  if (params.size() != np || ref_params.size() != np) {
    throw DimensionMismatch("parameter vectors do not match the policy");
  }
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != np) {
    throw DimensionMismatch("gradient buffer does not match the policy");
  }
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  if (batch.empty()) return {};

  const double group_weight = 1.0 / static_cast<double>(batch.size());
  double surrogate = 0.0;
  double kl = 0.0;

  std::vector<double> rewards, lp_new, lp_ref, weights;
  std::vector<std::size_t> actions;
  for (const GroupRollout& group : batch) {
    rewards.clear();
    for (const auto& m : group.members) rewards.push_back(m.reward);
    const auto adv = compute_group_advantages(rewards, cfg.std_floor);
    const double member_weight = group_weight / static_cast<double>(group.members.size());

    for (std::size_t i = 0; i < group.members.size(); ++i) {
      const auto& steps = group.members[i].steps;
      if (steps.empty()) throw std::invalid_argument("response with no decision steps");
      const std::size_t T = steps.size();
      actions.resize(T);
      lp_new.resize(T);
      lp_ref.resize(T);
      weights.resize(T);
      for (std::size_t t = 0; t < T; ++t) actions[t] = steps[t].action;
      policy.step_logprobs(group.query, actions, params, lp_new);
      policy.step_logprobs(group.query, actions, ref_params, lp_ref);

      const double w = member_weight / static_cast<double>(T);
      const double a = adv[i];
      for (std::size_t t = 0; t < T; ++t) {
        const double ratio = policy_ratio(lp_new[t], steps[t].logp_old);
        const double m = clipped_surrogate(ratio, a, cfg.clip_eps);
        const double k = kl_penalty(lp_ref[t], lp_new[t]);
        require_finite(m, "surrogate term");
        require_finite(k, "KL term");
        surrogate += w * m;
        kl += w * k;

        // d M / d logp_new = A * ratio on the unclipped branch, else 0.
        // d KL / d logp_new = 1 - rho.
        const bool unclipped =
            ratio * a <= std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
        const double rho = std::exp(lp_ref[t] - lp_new[t]);
        weights[t] = w * ((unclipped ? a * ratio : 0.0) - cfg.kl_coef * (1.0 - rho));
      }
      if (want_grad) policy.accumulate_grad(group.query, actions, params, weights, grad);
    }
  }

  LossBreakdown out{surrogate, kl, surrogate - cfg.kl_coef * kl};
  require_finite(out.objective, "objective");
  if (want_grad) {
    for (double g : grad) require_finite(g, "gradient");
  }
  return out;
}

LossBreakdown grpo_objective(std::span<const GroupRollout> batch, const PolicyModel& policy,
                             std::span<const double> params,
                             std::span<const double> ref_params, const GrpoConfig& cfg) {
  return grpo_objective_and_gradient(batch, policy, params, ref_params, cfg, {});
}

std::vector<double> grpo_gradient(std::span<const GroupRollout> batch,
                                  const PolicyModel& policy, std::span<const double> params,
                                  std::span<const double> ref_params, const GrpoConfig& cfg) {
  std::vector<double> grad(policy.num_params(), 0.0);
  grpo_objective_and_gradient(batch, policy, params, ref_params, cfg, grad);
  return grad;
}

// ---------------------------------------------------------------------------

RewardFunction make_reward_function(RewardMode mode, const RewardLadder& ladder) {
  ladder.validate();
  if (mode == RewardMode::Classical) {
    return [](const StructuredResponse& r, const Task& t) {
      return classical_score(r, t.ground_truth(), t.choices);
    };
  }
  return [ladder](const StructuredResponse& r, const Task& t) {
    return roam_score(r, t.ground_truth(), t.choices, ladder).total;
  };
}

std::string param_checksum(std::span<const double> params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : params) {
    std::array<unsigned char, sizeof(double)> bytes{};
    std::memcpy(bytes.data(), &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<GroupRollout> collect_rollouts(const GrpoConfig& cfg, std::size_t step,
                                           std::span<const Task> tasks,
                                           const PolicyModel& policy,
                                           std::span<const double> old_params,
                                           std::span<const double> ref_params,
                                           const RewardFunction& reward) {
  if (tasks.empty()) throw std::invalid_argument("training needs at least one task");
  Stream batch_stream = Stream::keyed(cfg.seed, kBatchStream, step);
  std::vector<GroupRollout> batch;
  batch.reserve(cfg.batch_size);
  std::vector<double> lp_ref;
  for (std::size_t slot = 0; slot < cfg.batch_size; ++slot) {
    const Task& task = tasks[batch_stream.below(tasks.size())];
    GroupRollout group{task, {}};
    group.members.reserve(cfg.group_size);
    for (std::size_t m = 0; m < cfg.group_size; ++m) {
      Stream stream = Stream::keyed(cfg.seed, kMemberStream, step, slot, m);
      SampledResponse s = policy.sample(task, old_params, stream);
      lp_ref.resize(s.actions.size());
      policy.step_logprobs(task, s.actions, ref_params, lp_ref);

      ResponseRecord rec;
      rec.steps.reserve(s.actions.size());
      for (std::size_t t = 0; t < s.actions.size(); ++t) {
        rec.steps.push_back({s.actions[t], s.logps[t], lp_ref[t]});
      }
      rec.structured = parse_tagged_response(s.text);
      rec.reward = reward(rec.structured, task);
      group.members.push_back(std::move(rec));
    }
    batch.push_back(std::move(group));
  }
  return batch;
}

TrainingTrace train_loop(const GrpoConfig& cfg, std::span<const Task> tasks,
                         const PolicyModel& policy, std::vector<double>& params,
                         const RewardFunction& reward,
                         const std::function<void(const TrainingStepRecord&)>& on_step) {
  cfg.validate();
  if (params.size() != policy.num_params()) {
    throw DimensionMismatch("initial parameters do not match the policy");
  }
  const std::vector<double> ref = params;
  TrainingTrace trace;
  trace.reserve(cfg.total_steps);
  std::vector<double> grad(params.size());

  for (std::size_t step = 0; step < cfg.total_steps; ++step) {
    const std::vector<double> old = params;
    const auto batch = collect_rollouts(cfg, step, tasks, policy, old, ref, reward);
    const LossBreakdown loss =
        grpo_objective_and_gradient(batch, policy, params, ref, cfg, grad);

    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    std::vector<double> next = params;
    for (std::size_t j = 0; j < next.size(); ++j) next[j] += cfg.learning_rate * grad[j];
    for (double v : next) require_finite(v, "parameter after update");
    params = std::move(next);

    double reward_sum = 0.0;
    std::size_t consistent = 0, members = 0;
    for (const auto& g : batch) {
      for (const auto& m : g.members) {
        reward_sum += m.reward;
        consistent += check_consistency(m.structured, g.query.choices).kind ==
                      Consistency::Consistent;
        ++members;
      }
    }
    TrainingStepRecord rec{step,
                           reward_sum / static_cast<double>(members),
                           static_cast<double>(consistent) / static_cast<double>(members),
                           loss.objective,
                           loss.surrogate,
                           loss.kl,
                           std::sqrt(norm2),
                           param_checksum(params)};
    if (on_step) on_step(rec);
    trace.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace roam
