// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#include "roam/reward.hpp"

#include <cmath>
#include <set>
#include <string>

namespace roam {
namespace {

// Resolves the answer against the choice set per the label policy.
std::optional<ChoiceLabel> checked_answer(const StructuredResponse& response,
                                          const GroundTruth& truth,
                                          const ChoiceSet& choices,
                                          LabelPolicy policy) {
  if (!choices.contains(truth.correct_label)) {
    throw std::invalid_argument(std::string("ground-truth label ") +
                                truth.correct_label.letter() +
                                " is not among the choices");
  }
  if (!response.answer) return std::nullopt;
  if (!choices.contains(*response.answer)) {
    if (policy == LabelPolicy::Strict) {
      throw InvalidLabel(std::string("answer ") + response.answer->letter() +
                         " is not among the " + std::to_string(choices.size()) +
                         " choices");
    }
    return std::nullopt;
  }
  return response.answer;
}

RewardBreakdown make(double phi, double psi, LadderRow row,
                     ConsistencyVerdict verdict, bool correct) {
  return RewardBreakdown{phi, psi, phi + psi, std::move(verdict), correct, row};
}

std::set<std::string> tokens(std::string_view s) {
  std::set<std::string> out;
  std::string cur;
  for (char c : s) {
    const bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                       (c >= '0' && c <= '9');
    if (alnum) {
      cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    } else if (!cur.empty()) {
      out.insert(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(std::move(cur));
  return out;
}

}  // namespace

void RewardLadder::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("reward ladder: ") + what);
  };
  for (double w : {w_inconsistent, w_present, w_consistent, w_correct, w_full}) {
    require(std::isfinite(w), "weights must be finite");
  }
  require(0.0 <= w_inconsistent, "w_inconsistent must be >= 0");
  require(w_inconsistent <= w_present, "w_inconsistent must be <= w_present");
  require(w_present <= w_consistent, "w_present must be <= w_consistent");
  require(w_consistent <= w_correct, "w_consistent must be <= w_correct");
  require(w_correct <= w_full, "w_correct must be <= w_full");
  require(w_present + w_correct <= w_full, "w_present + w_correct must be <= w_full");
}

std::string_view describe(LadderRow row) noexcept {
  switch (row) {
    case LadderRow::AnswerAbsent: return "answer absent";
    case LadderRow::Inconsistent: return "reasoning contradicts answer";
    case LadderRow::CorrectConsistent: return "correct answer derived by reasoning";
    case LadderRow::CorrectNoReasoning: return "correct answer without reasoning";
    case LadderRow::CorrectIndeterminate: return "correct answer, reasoning inconclusive";
    case LadderRow::IncorrectConsistent: return "incorrect answer derived by reasoning";
    case LadderRow::IncorrectIndeterminate: return "incorrect answer, reasoning inconclusive";
    case LadderRow::IncorrectNoReasoning: return "incorrect answer without reasoning";
  }
  return "answer absent";
}

std::string_view to_string(RewardMode mode) noexcept {
  return mode == RewardMode::Roam ? "roam" : "classical";
}

std::optional<RewardMode> reward_mode_from_string(std::string_view s) noexcept {
  if (s == "roam") return RewardMode::Roam;
  if (s == "classical") return RewardMode::Classical;
  return std::nullopt;
}

RewardBreakdown roam_score(const StructuredResponse& response,
                           const GroundTruth& truth, const ChoiceSet& choices,
                           const RewardLadder& ladder, LabelPolicy policy) {
  const auto answer = checked_answer(response, truth, choices, policy);
  if (!answer) return make(0.0, 0.0, LadderRow::AnswerAbsent, {}, false);

  StructuredResponse resolved = response;
  resolved.answer = answer;
  ConsistencyVerdict verdict = check_consistency(resolved, choices);
  const bool correct = *answer == truth.correct_label;
  const bool has_reasoning = response.reasoning.has_value();

  if (has_reasoning && verdict.kind == Consistency::Inconsistent) {
    return make(ladder.w_inconsistent, 0.0, LadderRow::Inconsistent, verdict, correct);
  }
  if (correct) {
    if (verdict.kind == Consistency::Consistent) {
      return make(ladder.w_consistent, ladder.w_full - ladder.w_consistent,
                  LadderRow::CorrectConsistent, verdict, true);
    }
    if (!has_reasoning) {
      return make(0.0, ladder.w_correct, LadderRow::CorrectNoReasoning, verdict, true);
    }
    return make(ladder.w_present, ladder.w_correct, LadderRow::CorrectIndeterminate,
                verdict, true);
  }
  if (verdict.kind == Consistency::Consistent) {
    return make(ladder.w_consistent, 0.0, LadderRow::IncorrectConsistent, verdict, false);
  }
  if (has_reasoning) {
    return make(ladder.w_present, 0.0, LadderRow::IncorrectIndeterminate, verdict, false);
  }
  return make(0.0, 0.0, LadderRow::IncorrectNoReasoning, verdict, false);
}

double classical_score(const StructuredResponse& response, const GroundTruth& truth,
                       const ChoiceSet& choices, LabelPolicy policy) {
  const auto answer = checked_answer(response, truth, choices, policy);
  return answer && *answer == truth.correct_label ? 1.0 : 0.0;
}

double phi_reference_similarity(std::string_view reasoning, std::string_view reference) {
  const auto a = tokens(reasoning);
  const auto b = tokens(reference);
  if (a.empty() && b.empty()) return 1.0;
  std::size_t shared = 0;
  for (const auto& t : a) shared += b.count(t);
  const std::size_t united = a.size() + b.size() - shared;
  return static_cast<double>(shared) / static_cast<double>(united);
}

}  // namespace roam
