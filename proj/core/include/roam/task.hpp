// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roam/response_parser.hpp"
#include "roam/reward.hpp"

namespace roam {

/// The seven inspection subtasks, in report column order.
enum class Subtask {
  AnomalyDiscrimination,
  DefectClassification,
  DefectLocalization,
  DefectDescription,
  DefectAnalysis,
  ObjectClassification,
  ObjectAnalysis,
};

inline constexpr std::size_t kNumSubtasks = 7;
inline constexpr std::array<Subtask, kNumSubtasks> kAllSubtasks = {
    Subtask::AnomalyDiscrimination, Subtask::DefectClassification,
    Subtask::DefectLocalization,    Subtask::DefectDescription,
    Subtask::DefectAnalysis,        Subtask::ObjectClassification,
    Subtask::ObjectAnalysis,
};

/// snake_case identifier, e.g. "defect_classification".
std::string_view to_string(Subtask s) noexcept;
std::optional<Subtask> subtask_from_string(std::string_view s) noexcept;

/// One multiple-choice inspection question.
///
/// `evidence` stands in for the image: its first `choices.size()` entries
/// are per-option match scores aligned with the presented choice order;
/// any remaining entries carry no signal.
struct Task {
  std::int64_t id = 0;
  Subtask subtask = Subtask::AnomalyDiscrimination;
  std::string dataset_tag;
  std::vector<double> evidence;
  ChoiceSet choices;
  /// Ground truth is "no anomaly". Only meaningful for AnomalyDiscrimination.
  bool normal = false;

  GroundTruth ground_truth() const { return {choices.correct_label(), std::nullopt}; }
};

}  // namespace roam
