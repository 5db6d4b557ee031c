// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roam/rng.hpp"
#include "roam/task.hpp"

namespace roam {

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A response produced by a policy: the discrete decision at each step,
/// the log-probability of each decision under the sampling parameters, and
/// the rendered text.
struct SampledResponse {
  std::vector<std::size_t> actions;
  std::vector<double> logps;
  std::string text;
};

/// Differentiable stochastic policy over a flat parameter vector.
///
/// This is the only surface the GRPO objective needs: per-step
/// log-probabilities of a recorded action sequence and their gradients.
class PolicyModel {
 public:
  virtual ~PolicyModel() = default;

  virtual std::size_t num_params() const = 0;

  virtual SampledResponse sample(const Task& task, std::span<const double> params,
                                 Stream& stream) const = 0;
  virtual SampledResponse greedy(const Task& task,
                                 std::span<const double> params) const = 0;

  /// out[t] = log pi(actions[t] | task, actions[<t]).
  virtual void step_logprobs(const Task& task, std::span<const std::size_t> actions,
                             std::span<const double> params,
                             std::span<double> out) const = 0;

  /// grad += sum_t weights[t] * d out[t] / d params.
  virtual void accumulate_grad(const Task& task, std::span<const std::size_t> actions,
                               std::span<const double> params,
                               std::span<const double> weights,
                               std::span<double> grad) const = 0;
};

}  // namespace roam
