// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "roam/response_parser.hpp"

namespace roam {

struct GroundTruth {
  ChoiceLabel correct_label;
  std::optional<std::string> reference_reasoning;
};

/// Score ladder for the reasoned-outcome reward. Must be monotone:
/// 0 <= inconsistent <= present <= consistent <= correct <= full, and
/// present + correct <= full so every total stays within [0, full].
struct RewardLadder {
  double w_inconsistent = 0.0;
  double w_present = 0.05;
  double w_consistent = 0.1;
  double w_correct = 0.8;
  double w_full = 1.0;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;

  friend bool operator==(const RewardLadder&, const RewardLadder&) = default;
};

/// Which decision-table row produced a score, evaluated top-down.
enum class LadderRow {
  AnswerAbsent = 1,
  Inconsistent = 2,
  CorrectConsistent = 3,
  CorrectNoReasoning = 4,
  CorrectIndeterminate = 5,
  IncorrectConsistent = 6,
  IncorrectIndeterminate = 7,
  IncorrectNoReasoning = 8,
};

/// Human-readable reason, e.g. "answer absent".
std::string_view describe(LadderRow row) noexcept;

struct RewardBreakdown {
  double phi = 0.0;    // process component
  double psi = 0.0;    // outcome component
  double total = 0.0;  // always phi + psi
  ConsistencyVerdict verdict;
  bool correct = false;
  LadderRow row = LadderRow::AnswerAbsent;
};

/// Raised in strict mode when the response names a label outside the
/// choice set.
class InvalidLabel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LabelPolicy {
  Lenient,  // out-of-set answers are scored as absent
  Strict,   // out-of-set answers throw InvalidLabel
};

enum class RewardMode { Roam, Classical };

std::string_view to_string(RewardMode mode) noexcept;
/// Accepts "roam" or "classical".
std::optional<RewardMode> reward_mode_from_string(std::string_view s) noexcept;

/// Process + outcome reward. Throws std::invalid_argument if the ground
/// truth label is not in `choices`.
RewardBreakdown roam_score(const StructuredResponse& response,
                           const GroundTruth& truth, const ChoiceSet& choices,
                           const RewardLadder& ladder = {},
                           LabelPolicy policy = LabelPolicy::Lenient);

/// Accuracy-only baseline: 1 for the correct label, 0 otherwise.
double classical_score(const StructuredResponse& response,
                       const GroundTruth& truth, const ChoiceSet& choices,
                       LabelPolicy policy = LabelPolicy::Lenient);

/// Token-level Jaccard similarity of two reasoning traces, over lower-cased
/// alphanumeric tokens. Two texts without any tokens score 1.
double phi_reference_similarity(std::string_view reasoning,
                                std::string_view reference);

}  // namespace roam
