// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#include "roam/toy_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

namespace roam {
namespace {

// Sub-stream tags for Stream::keyed.
enum : std::uint64_t { kSubtaskOrderStream = 1, kTaskStream = 2 };

constexpr std::string_view kInconclusiveClaim = "The evidence is inconclusive.";

struct SubtaskText {
  std::string_view claim_prefix;
  std::string_view claim_suffix;
  std::vector<std::string_view> pool;  // for discrimination: pool[0] is "normal"
};

const SubtaskText& texts_for(Subtask s) {
  static const std::array<SubtaskText, kNumSubtasks> kTexts = {{
      {"Compared with a defect-free reference, the inspected region shows: ",
       ". Therefore the answer is ",
       {"no, the object is normal", "yes, there is a surface scratch",
        "yes, there is a crack", "yes, there is contamination",
        "yes, part of the object is missing", "yes, the object is deformed",
        "yes, there is a misprint"}},
      {"The visible defect looks like ", ", so the answer is ",
       {"scratch", "crack", "contamination", "deformation", "hole",
        "discoloration", "fold"}},
      {"The anomalous region is located ", ". The answer is ",
       {"at the top edge", "in the center", "at the bottom-left corner",
        "along the right side", "near the thread", "around the rim"}},
      {"The defect is best described as ", "; I choose ",
       {"a thin linear mark", "an irregular dark stain", "a jagged fracture line",
        "a small round pit", "a bent section", "a frayed strand"}},
      {"Judging by its extent, ", ", which matches option ",
       {"it weakens the structural strength", "it only affects appearance",
        "it may cause leakage", "it blocks proper assembly",
        "it has no functional impact", "it shortens the service life"}},
      {"The object in the image is ", ". Therefore ",
       {"a metal screw", "a hazelnut", "a printed circuit board", "a glass bottle",
        "a wooden tile", "a cable bundle", "a plastic pill blister"}},
      {"Examining the object, ", ". The answer is ",
       {"the object has six visible teeth", "the object is fully intact in shape",
        "the object surface is textured", "the object has two connectors",
        "the label is printed upside down", "the object is partially transparent"}},
  }};
  return kTexts[static_cast<std::size_t>(s)];
}

void validate(const TaskFamilyConfig& cfg) {
  if (cfg.n < 1) throw InvalidMix("n", "n must be at least 1");
  if (cfg.num_choices < ChoiceSet::kMinChoices || cfg.num_choices > kMaxTaskChoices) {
    throw InvalidMix("num_choices", "num_choices must be in [2, " +
                                        std::to_string(kMaxTaskChoices) + "]");
  }
  if (cfg.dim < cfg.num_choices) {
    throw InvalidMix("dim", "dim must be at least num_choices");
  }
  if (!std::isfinite(cfg.difficulty) || cfg.difficulty < 0.0) {
    throw InvalidMix("difficulty", "difficulty must be finite and >= 0");
  }
  double sum = 0.0;
  for (double p : cfg.subtask_mix) {
    if (!std::isfinite(p) || p < 0.0) {
      throw InvalidMix("subtask_mix", "subtask_mix proportions must be finite and >= 0");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidMix("subtask_mix", "subtask_mix proportions must sum to 1 (got " +
                                        std::to_string(sum) + ")");
  }
}

std::array<std::size_t, kNumSubtasks> apportion(std::size_t n, const SubtaskMix& mix) {
  std::array<std::size_t, kNumSubtasks> counts{};
  std::array<double, kNumSubtasks> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < kNumSubtasks; ++i) {
    const double quota = static_cast<double>(n) * mix[i];
    counts[i] = static_cast<std::size_t>(std::floor(quota));
    remainder[i] = quota - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<std::size_t, kNumSubtasks> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) {
    ++counts[order[r % kNumSubtasks]];
  }
  return counts;
}

template <class T>
void shuffle(std::vector<T>& v, Stream& stream) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[stream.below(i)]);
  }
}

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

std::size_t argmax(std::span<const double> z) {
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::size_t draw(std::span<const double> logits, Stream& stream) {
  const double lse = log_sum_exp(logits);
  const double u = stream.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    acc += std::exp(logits[i] - lse);
    if (u < acc) return i;
  }
  return logits.size() - 1;
}

}  // namespace

std::string_view to_string(Subtask s) noexcept {
  switch (s) {
    case Subtask::AnomalyDiscrimination: return "anomaly_discrimination";
    case Subtask::DefectClassification: return "defect_classification";
    case Subtask::DefectLocalization: return "defect_localization";
    case Subtask::DefectDescription: return "defect_description";
    case Subtask::DefectAnalysis: return "defect_analysis";
    case Subtask::ObjectClassification: return "object_classification";
    case Subtask::ObjectAnalysis: return "object_analysis";
  }
  return "anomaly_discrimination";
}

std::optional<Subtask> subtask_from_string(std::string_view s) noexcept {
  for (Subtask t : kAllSubtasks) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::vector<Task> generate_tasks(const TaskFamilyConfig& cfg) {
  validate(cfg);
  const auto counts = apportion(cfg.n, cfg.subtask_mix);
  std::vector<Subtask> order;
  order.reserve(cfg.n);
  for (std::size_t s = 0; s < kNumSubtasks; ++s) {
    order.insert(order.end(), counts[s], kAllSubtasks[s]);
  }
  Stream order_stream = Stream::keyed(cfg.seed, kSubtaskOrderStream);
  shuffle(order, order_stream);

  const std::size_t c = cfg.num_choices;
  std::vector<Task> tasks;
  tasks.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    Stream stream = Stream::keyed(cfg.seed, kTaskStream, i);
    const Subtask subtask = order[i];
    const auto& pool = texts_for(subtask).pool;
    const auto dataset = kDatasetTags[stream.below(kDatasetTags.size())];

    // Draw c distinct option texts and the position of the correct one.
    std::vector<std::string_view> picked;
    std::size_t correct = 0;
    bool normal = false;
    if (subtask == Subtask::AnomalyDiscrimination) {
      normal = stream.uniform() < 0.5;
      std::vector<std::string_view> anomalies(pool.begin() + 1, pool.end());
      shuffle(anomalies, stream);
      picked.assign(anomalies.begin(), anomalies.begin() + static_cast<long>(c - 1));
      const std::size_t normal_pos = stream.below(c);
      picked.insert(picked.begin() + static_cast<long>(normal_pos), pool[0]);
      correct = normal ? normal_pos : (normal_pos + 1 + stream.below(c - 1)) % c;
    } else {
      std::vector<std::string_view> all(pool.begin(), pool.end());
      shuffle(all, stream);
      picked.assign(all.begin(), all.begin() + static_cast<long>(c));
      correct = stream.below(c);
    }

    std::vector<double> evidence(cfg.dim);
    for (std::size_t f = 0; f < cfg.dim; ++f) {
      const double signal = (f == correct) ? 1.0 : 0.0;
      evidence[f] = signal + cfg.difficulty * stream.normal();
    }

    std::vector<std::string> option_texts(picked.begin(), picked.end());
    tasks.push_back(Task{static_cast<std::int64_t>(i), subtask, std::string(dataset),
                         std::move(evidence),
                         ChoiceSet(std::move(option_texts), ChoiceLabel::from_index(correct)),
                         normal});
  }
  return tasks;
}

std::string claim_text(const Task& task, std::size_t claim) {
  if (claim >= task.choices.size()) return std::string(kInconclusiveClaim);
  const auto& t = texts_for(task.subtask);
  const ChoiceLabel label = ChoiceLabel::from_index(claim);
  std::string out;
  out.append(t.claim_prefix).append(task.choices.text(label)).append(t.claim_suffix);
  out.push_back(label.letter());
  out.push_back('.');
  return out;
}

// ---------------------------------------------------------------------------

FactoredPolicyParams FactoredPolicyParams::zeros(const PolicyShape& shape) {
  return {shape, std::vector<double>(shape.num_params(), 0.0)};
}

FactoredPolicyParams FactoredPolicyParams::random(const PolicyShape& shape,
                                                  Stream& stream, double scale) {
  auto p = zeros(shape);
  for (double& w : p.flat) w = scale * stream.normal();
  return p;
}

FactoredSoftmaxPolicy::FactoredSoftmaxPolicy(PolicyShape shape) : shape_(shape) {
  if (shape.dim == 0 || shape.claims == 0 || shape.choices < ChoiceSet::kMinChoices ||
      shape.claims > ChoiceSet::kMaxChoices || shape.choices > ChoiceSet::kMaxChoices) {
    throw DimensionMismatch("factored policy needs dim >= 1, 1-" +
                            std::to_string(ChoiceSet::kMaxChoices) + " claims and 2-" +
                            std::to_string(ChoiceSet::kMaxChoices) + " choices");
  }
}

void FactoredSoftmaxPolicy::check(const Task& task, std::span<const double> params) const {
  if (params.size() != shape_.num_params()) {
    throw DimensionMismatch("expected " + std::to_string(shape_.num_params()) +
                            " parameters, got " + std::to_string(params.size()));
  }
  if (task.evidence.size() != shape_.dim) {
    throw DimensionMismatch("task " + std::to_string(task.id) + " has evidence of dimension " +
                            std::to_string(task.evidence.size()) + ", policy expects " +
                            std::to_string(shape_.dim));
  }
  if (task.choices.size() != shape_.choices) {
    throw DimensionMismatch("task " + std::to_string(task.id) + " has " +
                            std::to_string(task.choices.size()) + " choices, policy expects " +
                            std::to_string(shape_.choices));
  }
}

void FactoredSoftmaxPolicy::claim_logits(const Task& task, std::span<const double> params,
                                         std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t f = 0; f < shape_.dim; ++f) {
    const double e = task.evidence[f];
    const double* row = params.data() + f * shape_.claims;
    for (std::size_t k = 0; k < shape_.claims; ++k) out[k] += e * row[k];
  }
}

std::vector<double> FactoredSoftmaxPolicy::claim_probs(const Task& task,
                                                       std::span<const double> params) const {
  check(task, params);
  std::vector<double> z(shape_.claims);
  claim_logits(task, params, z);
  const double lse = log_sum_exp(z);
  for (double& v : z) v = std::exp(v - lse);
  return z;
}

std::vector<double> FactoredSoftmaxPolicy::answer_probs(std::size_t claim,
                                                        std::span<const double> params) const {
  if (claim >= shape_.claims || params.size() != shape_.num_params()) {
    throw DimensionMismatch("answer_probs: bad claim index or parameter size");
  }
  const auto row = params.subspan(shape_.claim_block() + claim * shape_.choices, shape_.choices);
  std::vector<double> p(row.begin(), row.end());
  const double lse = log_sum_exp(p);
  for (double& v : p) v = std::exp(v - lse);
  return p;
}

PolicyLogProb FactoredSoftmaxPolicy::logprob(const Task& task, std::size_t claim,
                                             std::size_t answer,
                                             std::span<const double> params) const {
  check(task, params);
  if (claim >= shape_.claims || answer >= shape_.choices) {
    throw DimensionMismatch("logprob: claim or answer index out of range");
  }
  std::array<double, ChoiceSet::kMaxChoices> buf{};
  const std::span<double> z(buf.data(), shape_.claims);
  claim_logits(task, params, z);
  const double claim_lp = z[claim] - log_sum_exp(z);

  const auto row = params.subspan(shape_.claim_block() + claim * shape_.choices, shape_.choices);
  const double answer_lp = row[answer] - log_sum_exp(row);
  return {claim_lp + answer_lp, {claim_lp, answer_lp}};
}

std::vector<double> FactoredSoftmaxPolicy::grad_logprob(const Task& task, std::size_t claim,
                                                        std::size_t answer,
                                                        std::span<const double> params) const {
  std::vector<double> grad(shape_.num_params(), 0.0);
  const std::array<std::size_t, 2> actions{claim, answer};
  const std::array<double, 2> ones{1.0, 1.0};
  accumulate_grad(task, actions, params, ones, grad);
  return grad;
}

std::string FactoredSoftmaxPolicy::render(const Task& task, std::size_t claim,
                                          std::size_t answer) const {
  return render_tagged_response(claim_text(task, claim), ChoiceLabel::from_index(answer));
}

ResponseSample FactoredSoftmaxPolicy::finish(const Task& task, std::size_t claim,
                                             std::size_t answer,
                                             std::span<const double> params) const {
  const auto lp = logprob(task, claim, answer, params);
  return {claim, answer, render(task, claim, answer), lp.total, lp.steps};
}

ResponseSample FactoredSoftmaxPolicy::sample_response(const Task& task,
                                                      std::span<const double> params,
                                                      Stream& stream) const {
  check(task, params);
  std::array<double, ChoiceSet::kMaxChoices> buf{};
  const std::span<double> z(buf.data(), shape_.claims);
  claim_logits(task, params, z);
  const std::size_t k = draw(z, stream);
  const std::size_t a =
      draw(params.subspan(shape_.claim_block() + k * shape_.choices, shape_.choices), stream);
  return finish(task, k, a, params);
}

ResponseSample FactoredSoftmaxPolicy::greedy_response(const Task& task,
                                                      std::span<const double> params) const {
  check(task, params);
  std::array<double, ChoiceSet::kMaxChoices> buf{};
  const std::span<double> z(buf.data(), shape_.claims);
  claim_logits(task, params, z);
  const std::size_t k = argmax(z);
  const std::size_t a =
      argmax(params.subspan(shape_.claim_block() + k * shape_.choices, shape_.choices));
  return finish(task, k, a, params);
}

SampledResponse FactoredSoftmaxPolicy::sample(const Task& task, std::span<const double> params,
                                              Stream& stream) const {
  auto r = sample_response(task, params, stream);
  return {{r.claim, r.answer}, {r.step_logps[0], r.step_logps[1]}, std::move(r.rendered)};
}

SampledResponse FactoredSoftmaxPolicy::greedy(const Task& task,
                                              std::span<const double> params) const {
  auto r = greedy_response(task, params);
  return {{r.claim, r.answer}, {r.step_logps[0], r.step_logps[1]}, std::move(r.rendered)};
}

void FactoredSoftmaxPolicy::step_logprobs(const Task& task,
                                          std::span<const std::size_t> actions,
                                          std::span<const double> params,
                                          std::span<double> out) const {
  if (actions.size() != 2 || out.size() != 2) {
    throw DimensionMismatch("factored policy responses have exactly 2 steps");
  }
  const auto lp = logprob(task, actions[0], actions[1], params);
  out[0] = lp.steps[0];
  out[1] = lp.steps[1];
}

void FactoredSoftmaxPolicy::accumulate_grad(const Task& task,
                                            std::span<const std::size_t> actions,
                                            std::span<const double> params,
                                            std::span<const double> weights,
                                            std::span<double> grad) const {
  check(task, params);
  if (actions.size() != 2 || weights.size() != 2 || grad.size() != shape_.num_params()) {
    throw DimensionMismatch("accumulate_grad: expected 2 steps and a full-size gradient");
  }
  const std::size_t k = actions[0];
  const std::size_t a = actions[1];
  if (k >= shape_.claims || a >= shape_.choices) {
    throw DimensionMismatch("accumulate_grad: action index out of range");
  }

  // Claim block: evidence (outer) (onehot(k) - p_claim).
  if (weights[0] != 0.0) {
    const auto p = claim_probs(task, params);
    for (std::size_t f = 0; f < shape_.dim; ++f) {
      const double scaled = weights[0] * task.evidence[f];
      double* row = grad.data() + f * shape_.claims;
      for (std::size_t j = 0; j < shape_.claims; ++j) {
        row[j] += scaled * ((j == k ? 1.0 : 0.0) - p[j]);
      }
    }
  }
  // Answer block, row k only: onehot(a) - p_answer|k.
  if (weights[1] != 0.0) {
    const auto q = answer_probs(k, params);
    double* row = grad.data() + shape_.claim_block() + k * shape_.choices;
    for (std::size_t j = 0; j < shape_.choices; ++j) {
      row[j] += weights[1] * ((j == a ? 1.0 : 0.0) - q[j]);
    }
  }
}

}  // namespace roam
