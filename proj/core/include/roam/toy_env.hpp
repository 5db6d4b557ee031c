// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roam/policy_model.hpp"
#include "roam/rng.hpp"
#include "roam/task.hpp"

namespace roam {

// ---------------------------------------------------------------------------
// Synthetic task family
// ---------------------------------------------------------------------------

using SubtaskMix = std::array<double, kNumSubtasks>;

inline constexpr SubtaskMix kUniformMix = {1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7,
                                           1.0 / 7, 1.0 / 7, 1.0 / 7};

/// Names the synthetic dataset families tasks are drawn from.
inline constexpr std::array<std::string_view, 4> kDatasetTags = {
    "synth-mvtec", "synth-visa", "synth-goodsad", "synth-loco"};

struct TaskFamilyConfig {
  std::uint64_t seed = 0;
  std::size_t n = 700;
  std::size_t dim = 8;
  std::size_t num_choices = 4;
  /// Standard deviation of the additive evidence noise.
  double difficulty = 0.5;
  SubtaskMix subtask_mix = kUniformMix;
};

/// Bad task-family settings. `field()` names the offending setting.
class InvalidMix : public std::invalid_argument {
 public:
  InvalidMix(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Largest choice count the built-in text pools support.
inline constexpr std::size_t kMaxTaskChoices = 6;

/// Deterministic in `cfg`. Subtask counts follow largest-remainder
/// apportionment of n over the mix; throws InvalidMix on bad settings.
std::vector<Task> generate_tasks(const TaskFamilyConfig& cfg);

/// Reasoning text for claim `k`: a subtask-specific sentence that names
/// choice `k` and concludes with its label. Claims beyond the last choice
/// render a sentence that names no option.
std::string claim_text(const Task& task, std::size_t claim);

// ---------------------------------------------------------------------------
// Factored softmax policy
// ---------------------------------------------------------------------------

/// claim_weights is dim x claims (row-major, feature-major), followed by
/// answer_weights claims x choices.
struct PolicyShape {
  std::size_t dim = 8;
  std::size_t claims = 4;
  std::size_t choices = 4;

  std::size_t claim_block() const noexcept { return dim * claims; }
  std::size_t num_params() const noexcept { return dim * claims + claims * choices; }

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

struct FactoredPolicyParams {
  PolicyShape shape;
  std::vector<double> flat;

  static FactoredPolicyParams zeros(const PolicyShape& shape);
  /// Small N(0, scale^2) weights drawn from `stream`.
  static FactoredPolicyParams random(const PolicyShape& shape, Stream& stream,
                                     double scale);

  double& claim_weight(std::size_t feature, std::size_t claim) {
    return flat[feature * shape.claims + claim];
  }
  double& answer_weight(std::size_t claim, std::size_t answer) {
    return flat[shape.claim_block() + claim * shape.choices + answer];
  }
};

struct ResponseSample {
  std::size_t claim = 0;
  std::size_t answer = 0;
  std::string rendered;
  double logp_total = 0.0;
  std::array<double, 2> step_logps{};  // (claim, answer | claim)
};

struct PolicyLogProb {
  double total = 0.0;
  std::array<double, 2> steps{};
};

/// Two-step categorical policy standing in for a language model: first a
/// claim k ~ softmax(evidence^T claim_weights), rendered as reasoning that
/// names choice k; then an answer a ~ softmax(answer_weights[k]).
///
/// Claim k names choice k. With fewer claims than choices some answers have
/// no supporting claim; with more, the extra claims name nothing.
class FactoredSoftmaxPolicy final : public PolicyModel {
 public:
  explicit FactoredSoftmaxPolicy(PolicyShape shape);

  const PolicyShape& shape() const noexcept { return shape_; }

  std::vector<double> claim_probs(const Task& task, std::span<const double> params) const;
  std::vector<double> answer_probs(std::size_t claim, std::span<const double> params) const;

  ResponseSample sample_response(const Task& task, std::span<const double> params,
                                 Stream& stream) const;
  ResponseSample greedy_response(const Task& task, std::span<const double> params) const;

  PolicyLogProb logprob(const Task& task, std::size_t claim, std::size_t answer,
                        std::span<const double> params) const;
  /// d logp_total / d params.
  std::vector<double> grad_logprob(const Task& task, std::size_t claim,
                                   std::size_t answer,
                                   std::span<const double> params) const;

  std::string render(const Task& task, std::size_t claim, std::size_t answer) const;

  // PolicyModel
  std::size_t num_params() const override { return shape_.num_params(); }
  SampledResponse sample(const Task& task, std::span<const double> params,
                         Stream& stream) const override;
  SampledResponse greedy(const Task& task, std::span<const double> params) const override;
  void step_logprobs(const Task& task, std::span<const std::size_t> actions,
                     std::span<const double> params,
                     std::span<double> out) const override;
  void accumulate_grad(const Task& task, std::span<const std::size_t> actions,
                       std::span<const double> params, std::span<const double> weights,
                       std::span<double> grad) const override;

 private:
  void check(const Task& task, std::span<const double> params) const;
  void claim_logits(const Task& task, std::span<const double> params,
                    std::span<double> out) const;
  ResponseSample finish(const Task& task, std::size_t claim, std::size_t answer,
                        std::span<const double> params) const;

  PolicyShape shape_;
};

}  // namespace roam
