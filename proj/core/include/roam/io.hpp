// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "roam/eval.hpp"
#include "roam/grpo.hpp"
#include "roam/reward.hpp"
#include "roam/task.hpp"
#include "roam/toy_env.hpp"

namespace roam {

/// A document that does not match its schema.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Task sets: a JSON array of
//   {"id": 3, "subtask": "defect_classification", "dataset_tag": "synth-visa",
//    "choices": [{"label": "A", "text": "scratch"}, ...], "correct_label": "B",
//    "normal": false, "evidence": [0.93, ...]}
std::string tasks_to_json(std::span<const Task> tasks);
std::vector<Task> tasks_from_json(std::string_view text);

/// Trained parameters plus everything needed to interpret and reproduce them.
/// Doubles are written in shortest round-trip form, so save/load is bit-exact.
struct Checkpoint {
  PolicyShape shape;
  std::vector<double> params;
  GrpoConfig config;
  RewardMode reward_mode = RewardMode::Roam;
  RewardLadder ladder;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
/// Verifies the stored checksum against the parameters.
Checkpoint checkpoint_from_json(std::string_view text);

/// One JSON object, no trailing newline.
std::string trace_record_to_json(const TrainingStepRecord& rec);
TrainingStepRecord trace_record_from_json(std::string_view line);

std::string grpo_config_to_json(const GrpoConfig& cfg);

std::string eval_report_to_json(const EvalReport& report,
                                const std::optional<ConsistencyRate>& consistency);

/// Columns: scope, the seven subtasks in report order, average. The first
/// row is "overall" (discrimination column balanced); one row per dataset
/// follows.
std::string eval_report_to_csv(const EvalReport& report);

}  // namespace roam
