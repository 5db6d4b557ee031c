// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace roam {

/// A multiple-choice label: a single uppercase letter 'A'..'Z'.
class ChoiceLabel {
 public:
  static constexpr std::size_t kMaxChoices = 26;

  /// Throws std::invalid_argument unless `letter` is in 'A'..'Z'.
  explicit ChoiceLabel(char letter);
  static ChoiceLabel from_index(std::size_t index);

  char letter() const noexcept { return letter_; }
  std::size_t index() const noexcept {
    return static_cast<std::size_t>(letter_ - 'A');
  }
  std::string str() const { return std::string(1, letter_); }

  friend auto operator<=>(const ChoiceLabel&, const ChoiceLabel&) = default;

 private:
  char letter_;
};

struct Choice {
  ChoiceLabel label;
  std::string text;
};

/// Ordered answer options labelled contiguously from 'A', plus the key.
class ChoiceSet {
 public:
  static constexpr std::size_t kMinChoices = 2;
  static constexpr std::size_t kMaxChoices = 8;

  /// Labels are assigned A, B, C, ... in order. Throws std::invalid_argument
  /// on a size outside [2, 8] or a key that is not among the labels.
  ChoiceSet(std::vector<std::string> texts, ChoiceLabel correct);

  std::span<const Choice> choices() const noexcept { return choices_; }
  std::size_t size() const noexcept { return choices_.size(); }
  ChoiceLabel correct_label() const noexcept { return correct_; }
  bool contains(ChoiceLabel label) const noexcept {
    return label.index() < choices_.size();
  }
  const std::string& text(ChoiceLabel label) const;

 private:
  std::vector<Choice> choices_;
  ChoiceLabel correct_;
};

/// Parsed policy output.
struct StructuredResponse {
  std::optional<std::string> reasoning;
  std::optional<ChoiceLabel> answer;
  /// Exactly one think block followed by one answer block, both non-empty.
  bool well_formed = false;
  std::string raw;
};

enum class Consistency { Consistent, Inconsistent, Indeterminate };

struct ConsistencyVerdict {
  Consistency kind = Consistency::Indeterminate;
  std::optional<ChoiceLabel> derived_claim;
};

std::string_view to_string(Consistency c) noexcept;

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

/// Total function: never throws on any byte string.
///
/// Tag grammar is first-match and non-nested. The reasoning is the trimmed
/// body of the first <think>...</think> pair (absent when empty); the
/// answer is the first standalone letter inside the first
/// <answer>...</answer> pair, upper-cased.
StructuredResponse parse_tagged_response(std::string_view raw);

/// Inverse of parse_tagged_response for well-formed inputs.
std::string render_tagged_response(std::string_view reasoning,
                                   ChoiceLabel answer);

/// Conclusion a reasoning trace commits to, or nullopt.
///
/// Heuristics, first hit wins:
///   1. the last conclusion phrase ("answer is X", "option X", "choose X",
///      "therefore X") naming a valid label;
///   2. the choice whose text occurs (case-insensitively) closest to the end;
///   3. a valid label as the final alphanumeric token.
/// Label letters in the reasoning must be uppercase, so the article "a" is
/// never read as option A.
std::optional<ChoiceLabel> extract_final_claim(std::string_view reasoning,
                                               const ChoiceSet& choices);

ConsistencyVerdict check_consistency(const StructuredResponse& response,
                                     const ChoiceSet& choices);

// ---------------------------------------------------------------------------
// Bounding-box annotations
// ---------------------------------------------------------------------------

struct BoundingBoxAnnotation {
  std::string label;
  std::int64_t x_min = 0;
  std::int64_t y_min = 0;
  std::int64_t x_max = 0;
  std::int64_t y_max = 0;

  friend bool operator==(const BoundingBoxAnnotation&,
                         const BoundingBoxAnnotation&) = default;
};

class BoundingBoxError : public std::runtime_error {
 public:
  enum class Kind { MalformedJson, SchemaViolation, DegenerateBox };

  BoundingBoxError(Kind kind, std::optional<std::size_t> index,
                   const std::string& what);

  Kind kind() const noexcept { return kind_; }
  /// Offending array element, when the error is attributable to one.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Kind kind_;
  std::optional<std::size_t> index_;
};

/// Parses `[{"bbox": [x_min, y_min, x_max, y_max], "label": "..."}, ...]`.
/// Throws BoundingBoxError.
std::vector<BoundingBoxAnnotation> parse_bbox_json(std::string_view raw);

}  // namespace roam
