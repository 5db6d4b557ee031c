// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#include "roam/response_parser.hpp"

#include <array>
#include <string>

#include <json.hpp>

namespace roam {
namespace {

// Locale-independent ASCII classification; bytes >= 0x80 are never letters.
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_alpha(char c) { return is_upper(c) || is_lower(c); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}
char to_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }
char to_upper(char c) { return is_lower(c) ? static_cast<char>(c - 'a' + 'A') : c; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lowered(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = to_lower(c);
  return out;
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool only_space(std::string_view s) { return trim(s).empty(); }

// A letter with no alphanumeric neighbour.
bool standalone_at(std::string_view s, std::size_t i) {
  if (!is_alpha(s[i])) return false;
  if (i > 0 && is_alnum(s[i - 1])) return false;
  if (i + 1 < s.size() && is_alnum(s[i + 1])) return false;
  return true;
}

std::optional<ChoiceLabel> answer_letter(std::string_view body) {
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (is_upper(body[i]) && standalone_at(body, i)) return ChoiceLabel(body[i]);
  }
  // "<answer>b</answer>": a lone lowercase letter is still a label.
  std::string_view core = trim(body);
  while (!core.empty() && !is_alnum(core.front())) core.remove_prefix(1);
  while (!core.empty() && !is_alnum(core.back())) core.remove_suffix(1);
  if (core.size() == 1 && is_alpha(core[0])) return ChoiceLabel(to_upper(core[0]));
  return std::nullopt;
}

struct TagBlock {
  std::size_t open;   // position of the opening tag
  std::size_t close;  // position of the closing tag
  std::string_view body;
};

std::optional<TagBlock> first_block(std::string_view text, std::string_view open,
                                    std::string_view close) {
  const auto o = text.find(open);
  if (o == std::string_view::npos) return std::nullopt;
  const auto body_start = o + open.size();
  const auto c = text.find(close, body_start);
  if (c == std::string_view::npos) return std::nullopt;
  return TagBlock{o, c, text.substr(body_start, c - body_start)};
}

constexpr std::array<std::string_view, 4> kConclusionPhrases = {
    "answer is", "option", "choose", "therefore"};

// Label token right after a conclusion phrase: optional ':' and whitespace,
// an optional opening bracket or quote, then an uppercase letter that is not
// glued to further alphanumerics.
std::optional<std::size_t> label_after(std::string_view text, std::size_t pos) {
  while (pos < text.size() && (is_space(text[pos]) || text[pos] == ':')) ++pos;
  if (pos < text.size() &&
      (text[pos] == '(' || text[pos] == '[' || text[pos] == '"' ||
       text[pos] == '\'')) {
    ++pos;
  }
  if (pos >= text.size() || !is_upper(text[pos])) return std::nullopt;
  if (pos + 1 < text.size() && is_alnum(text[pos + 1])) return std::nullopt;
  return pos;
}

std::optional<ChoiceLabel> conclusion_phrase_claim(std::string_view text,
                                                   const std::string& lower,
                                                   const ChoiceSet& choices) {
  std::optional<std::size_t> best_pos;
  for (std::string_view phrase : kConclusionPhrases) {
    for (auto p = lower.find(phrase); p != std::string::npos;
         p = lower.find(phrase, p + 1)) {
      if (p > 0 && is_alnum(lower[p - 1])) continue;
      const auto end = p + phrase.size();
      if (end < lower.size() && is_alnum(lower[end])) continue;
      const auto at = label_after(text, end);
      if (!at || !choices.contains(ChoiceLabel(text[*at]))) continue;
      if (!best_pos || *at > *best_pos) best_pos = at;
    }
  }
  if (!best_pos) return std::nullopt;
  return ChoiceLabel(text[*best_pos]);
}

std::optional<ChoiceLabel> verbatim_text_claim(const std::string& lower,
                                               const ChoiceSet& choices) {
  std::optional<ChoiceLabel> best;
  std::size_t best_end = 0;
  std::size_t best_len = 0;
  for (const Choice& c : choices.choices()) {
    const std::string needle = lowered(trim(c.text));
    if (needle.empty()) continue;
    const auto p = lower.rfind(needle);
    if (p == std::string::npos) continue;
    const auto end = p + needle.size();
    // Ties on end position go to the longer text ("long scratch" over
    // "scratch"), then to the earlier label.
    if (!best || end > best_end || (end == best_end && needle.size() > best_len)) {
      best = c.label;
      best_end = end;
      best_len = needle.size();
    }
  }
  return best;
}

std::optional<ChoiceLabel> trailing_letter_claim(std::string_view text,
                                                 const ChoiceSet& choices) {
  std::size_t end = text.size();
  while (end > 0 && !is_alnum(text[end - 1])) --end;
  if (end == 0) return std::nullopt;
  std::size_t begin = end;
  while (begin > 0 && is_alnum(text[begin - 1])) --begin;
  if (end - begin != 1 || !is_upper(text[begin])) return std::nullopt;
  const ChoiceLabel label(text[begin]);
  if (!choices.contains(label)) return std::nullopt;
  return label;
}

}  // namespace

ChoiceLabel::ChoiceLabel(char letter) : letter_(letter) {
  if (!is_upper(letter)) {
    throw std::invalid_argument("choice label must be an uppercase letter");
  }
}

ChoiceLabel ChoiceLabel::from_index(std::size_t index) {
  if (index >= kMaxChoices) {
    throw std::invalid_argument("choice index out of range");
  }
  return ChoiceLabel(static_cast<char>('A' + index));
}

ChoiceSet::ChoiceSet(std::vector<std::string> texts, ChoiceLabel correct)
    : correct_(correct) {
  if (texts.size() < kMinChoices || texts.size() > kMaxChoices) {
    throw std::invalid_argument("a choice set needs between 2 and 8 choices, got " +
                                std::to_string(texts.size()));
  }
  choices_.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    choices_.push_back(Choice{ChoiceLabel::from_index(i), std::move(texts[i])});
  }
  if (!contains(correct)) {
    throw std::invalid_argument(std::string("correct label ") + correct.letter() +
                                " is not among the choices");
  }
}

const std::string& ChoiceSet::text(ChoiceLabel label) const {
  if (!contains(label)) {
    throw std::out_of_range(std::string("no choice labelled ") + label.letter());
  }
  return choices_[label.index()].text;
}

std::string_view to_string(Consistency c) noexcept {
  switch (c) {
    case Consistency::Consistent: return "consistent";
    case Consistency::Inconsistent: return "inconsistent";
    case Consistency::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

StructuredResponse parse_tagged_response(std::string_view raw) {
  StructuredResponse out;
  out.raw = std::string(raw);

  const auto think = first_block(raw, kThinkOpen, kThinkClose);
  if (think) {
    const auto body = trim(think->body);
    if (!body.empty()) out.reasoning = std::string(body);
  }
  const auto answer = first_block(raw, kAnswerOpen, kAnswerClose);
  if (answer) out.answer = answer_letter(answer->body);

  if (!think || !answer || !out.reasoning || !out.answer) return out;
  for (std::string_view tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (count_occurrences(raw, tag) != 1) return out;
  }
  const auto think_end = think->close + kThinkClose.size();
  const auto answer_end = answer->close + kAnswerClose.size();
  out.well_formed = think->close < answer->open &&
                    only_space(raw.substr(0, think->open)) &&
                    only_space(raw.substr(think_end, answer->open - think_end)) &&
                    only_space(raw.substr(answer_end));
  return out;
}

std::string render_tagged_response(std::string_view reasoning, ChoiceLabel answer) {
  std::string out;
  out.reserve(reasoning.size() + 40);
  out.append(kThinkOpen).append(reasoning).append(kThinkClose);
  out.append(kAnswerOpen).push_back(answer.letter());
  out.append(kAnswerClose);
  return out;
}

std::optional<ChoiceLabel> extract_final_claim(std::string_view reasoning,
                                               const ChoiceSet& choices) {
  const std::string lower = lowered(reasoning);
  if (auto hit = conclusion_phrase_claim(reasoning, lower, choices)) return hit;
  if (auto hit = verbatim_text_claim(lower, choices)) return hit;
  return trailing_letter_claim(reasoning, choices);
}

ConsistencyVerdict check_consistency(const StructuredResponse& response,
                                     const ChoiceSet& choices) {
  if (!response.reasoning || !response.answer) return {};
  const auto claim = extract_final_claim(*response.reasoning, choices);
  if (!claim) return {};
  return {*claim == *response.answer ? Consistency::Consistent
                                     : Consistency::Inconsistent,
          claim};
}

BoundingBoxError::BoundingBoxError(Kind kind, std::optional<std::size_t> index,
                                   const std::string& what)
    : std::runtime_error(what), kind_(kind), index_(index) {}

std::vector<BoundingBoxAnnotation> parse_bbox_json(std::string_view raw) {
  using Kind = BoundingBoxError::Kind;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw BoundingBoxError(Kind::MalformedJson, std::nullopt,
                           std::string("malformed bounding-box JSON: ") + e.what());
  }
  if (!doc.is_array()) {
    throw BoundingBoxError(Kind::SchemaViolation, std::nullopt,
                           "bounding-box document must be a JSON array");
  }

  std::vector<BoundingBoxAnnotation> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const auto fail = [i](Kind kind, const std::string& msg) {
      return BoundingBoxError(kind, i, "element " + std::to_string(i) + ": " + msg);
    };
    if (!item.is_object()) throw fail(Kind::SchemaViolation, "not an object");
    const auto bbox = item.find("bbox");
    const auto label = item.find("label");
    if (bbox == item.end() || label == item.end()) {
      throw fail(Kind::SchemaViolation, "requires keys \"bbox\" and \"label\"");
    }
    if (!label->is_string()) throw fail(Kind::SchemaViolation, "\"label\" must be a string");
    if (!bbox->is_array() || bbox->size() != 4) {
      throw fail(Kind::SchemaViolation, "\"bbox\" must be an array of 4 integers");
    }
    std::array<std::int64_t, 4> v{};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& coord = (*bbox)[k];
      if (!coord.is_number_integer()) {
        throw fail(Kind::SchemaViolation, "\"bbox\" must be an array of 4 integers");
      }
      if (coord.is_number_unsigned() &&
          coord.get<std::uint64_t>() >
              static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw fail(Kind::SchemaViolation, "coordinate out of range");
      }
      v[k] = coord.get<std::int64_t>();
    }
    BoundingBoxAnnotation box{label->get<std::string>(), v[0], v[1], v[2], v[3]};
    if (box.x_min < 0 || box.y_min < 0 || box.x_min >= box.x_max ||
        box.y_min >= box.y_max) {
      throw fail(Kind::DegenerateBox,
                 "degenerate box [" + std::to_string(v[0]) + ", " +
                     std::to_string(v[1]) + ", " + std::to_string(v[2]) + ", " +
                     std::to_string(v[3]) + "]");
    }
    out.push_back(std::move(box));
  }
  return out;
}

}  // namespace roam
