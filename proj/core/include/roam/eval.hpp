// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roam/policy_model.hpp"
#include "roam/rng.hpp"
#include "roam/task.hpp"

namespace roam {

/// A task as presented to the policy after shuffling its options.
struct EvalItem {
  /// Choices, key and per-option evidence in presented order.
  Task presented;
  /// permutation[original index] = presented index.
  std::vector<std::size_t> permutation;
};

/// Fisher-Yates shuffle of the options keyed on (seed, task.id). Labels are
/// reassigned A, B, ... in presented order and the per-option evidence
/// slots move with their options.
EvalItem randomize_choices(const Task& task, std::uint64_t seed);
std::vector<EvalItem> randomize_all(std::span<const Task> tasks, std::uint64_t seed);

struct EvalOptions {
  std::uint64_t seed = 0;
  std::size_t samples_per_item = 1;
  /// Argmax decoding; only honoured when samples_per_item == 1.
  bool greedy = true;
};

/// Produces raw response text for a presented task.
using Responder = std::function<std::string(const Task&, Stream&, bool greedy)>;

/// Per-item result fed into aggregation.
struct ItemOutcome {
  Subtask subtask = Subtask::AnomalyDiscrimination;
  std::string dataset_tag;
  bool normal = false;
  double accuracy = 0.0;  // fraction of samples answered correctly
};

struct EvalReport {
  std::map<Subtask, double> per_subtask_accuracy;
  std::map<std::string, double> per_dataset_accuracy;
  /// dataset x subtask accuracy cells.
  std::map<std::string, std::map<Subtask, double>> cells;
  /// Unweighted mean over the subtasks present.
  double macro_average = 0.0;
  /// Unweighted mean over the datasets present.
  double dataset_macro_average = 0.0;
  /// Mean of normal-item and abnormal-item accuracy on AnomalyDiscrimination;
  /// absent when there are no such items.
  std::optional<double> discrimination_balanced;
  std::map<Subtask, std::size_t> counts;
  std::size_t num_items = 0;
};

/// Categories with no items are omitted, never divided by zero.
EvalReport aggregate(std::span<const ItemOutcome> outcomes);

EvalReport evaluate(const Responder& responder, std::span<const EvalItem> items,
                    const EvalOptions& opts);
EvalReport evaluate(const PolicyModel& policy, std::span<const double> params,
                    std::span<const EvalItem> items, const EvalOptions& opts);

struct ConsistencyRate {
  double rate = 1.0;
  /// No responses were scored; `rate` is the vacuous 1.0.
  bool vacuous = true;
  std::size_t samples = 0;
};

/// Fraction of responses whose reasoning and answer agree. Responses are
/// always sampled (never argmax), samples_per_item per item.
ConsistencyRate consistency_rate(const Responder& responder, std::span<const EvalItem> items,
                                 const EvalOptions& opts);
ConsistencyRate consistency_rate(const PolicyModel& policy, std::span<const double> params,
                                 std::span<const EvalItem> items, const EvalOptions& opts);

/// Wraps a policy and fixed parameters as a Responder.
Responder policy_responder(const PolicyModel& policy, std::span<const double> params);

}  // namespace roam
