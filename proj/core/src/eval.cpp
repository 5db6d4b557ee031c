// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#include "roam/eval.hpp"

#include <array>
#include <numeric>
#include <utility>

#include "roam/response_parser.hpp"

namespace roam {
namespace {

enum : std::uint64_t { kPermutationStream = 21, kEvalStream = 22, kConsistencyStream = 23 };

template <class Key>
std::map<Key, double> means(const std::map<Key, std::pair<double, std::size_t>>& sums) {
  std::map<Key, double> out;
  for (const auto& [k, v] : sums) {
    if (v.second > 0) out[k] = v.first / static_cast<double>(v.second);
  }
  return out;
}

template <class Map>
double mean_of_values(const Map& m) {
  if (m.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [k, v] : m) s += v;
  return s / static_cast<double>(m.size());
}

}  // namespace

EvalItem randomize_choices(const Task& task, std::uint64_t seed) {
  const std::size_t c = task.choices.size();
  // presented[p] = original index shown at position p.
  std::vector<std::size_t> presented(c);
  std::iota(presented.begin(), presented.end(), std::size_t{0});
  Stream stream = Stream::keyed(seed, kPermutationStream,
                                static_cast<std::uint64_t>(task.id));
  for (std::size_t i = c; i > 1; --i) std::swap(presented[i - 1], presented[stream.below(i)]);

  std::vector<std::size_t> permutation(c);
  std::vector<std::string> texts(c);
  for (std::size_t p = 0; p < c; ++p) {
    permutation[presented[p]] = p;
    texts[p] = task.choices.choices()[presented[p]].text;
  }
  std::vector<double> evidence = task.evidence;
  for (std::size_t p = 0; p < c && p < evidence.size(); ++p) {
    evidence[p] = task.evidence[presented[p]];
  }
  const auto key = ChoiceLabel::from_index(permutation[task.choices.correct_label().index()]);
  return EvalItem{Task{task.id, task.subtask, task.dataset_tag, std::move(evidence),
                       ChoiceSet(std::move(texts), key), task.normal},
                  std::move(permutation)};
}

std::vector<EvalItem> randomize_all(std::span<const Task> tasks, std::uint64_t seed) {
  std::vector<EvalItem> out;
  out.reserve(tasks.size());
  for (const Task& t : tasks) out.push_back(randomize_choices(t, seed));
  return out;
}

EvalReport aggregate(std::span<const ItemOutcome> outcomes) {
  std::map<Subtask, std::pair<double, std::size_t>> by_subtask;
  std::map<std::string, std::pair<double, std::size_t>> by_dataset;
  std::map<std::string, std::map<Subtask, std::pair<double, std::size_t>>> by_cell;
  std::array<std::pair<double, std::size_t>, 2> discrimination{};  // [abnormal, normal]

  EvalReport report;
  for (const ItemOutcome& o : outcomes) {
    auto& s = by_subtask[o.subtask];
    s.first += o.accuracy;
    ++s.second;
    auto& d = by_dataset[o.dataset_tag];
    d.first += o.accuracy;
    ++d.second;
    auto& cell = by_cell[o.dataset_tag][o.subtask];
    cell.first += o.accuracy;
    ++cell.second;
    if (o.subtask == Subtask::AnomalyDiscrimination) {
      auto& b = discrimination[o.normal ? 1 : 0];
      b.first += o.accuracy;
      ++b.second;
    }
    ++report.counts[o.subtask];
  }
  report.num_items = outcomes.size();
  report.per_subtask_accuracy = means(by_subtask);
  report.per_dataset_accuracy = means(by_dataset);
  for (const auto& [tag, cells] : by_cell) report.cells[tag] = means(cells);
  report.macro_average = mean_of_values(report.per_subtask_accuracy);
  report.dataset_macro_average = mean_of_values(report.per_dataset_accuracy);

  double sum = 0.0;
  int classes = 0;
  for (const auto& [acc, n] : discrimination) {
    if (n == 0) continue;
    sum += acc / static_cast<double>(n);
    ++classes;
  }
  if (classes > 0) report.discrimination_balanced = sum / classes;
  return report;
}

EvalReport evaluate(const Responder& responder, std::span<const EvalItem> items,
                    const EvalOptions& opts) {
  if (opts.samples_per_item < 1) {
    throw std::invalid_argument("samples_per_item must be at least 1");
  }
  const bool greedy = opts.greedy && opts.samples_per_item == 1;
  std::vector<ItemOutcome> outcomes;
  outcomes.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Task& task = items[i].presented;
    std::size_t hits = 0;
    for (std::size_t s = 0; s < opts.samples_per_item; ++s) {
      Stream stream = Stream::keyed(opts.seed, kEvalStream, i, s);
      const auto parsed = parse_tagged_response(responder(task, stream, greedy));
      hits += parsed.answer && *parsed.answer == task.choices.correct_label();
    }
    outcomes.push_back({task.subtask, task.dataset_tag, task.normal,
                        static_cast<double>(hits) /
                            static_cast<double>(opts.samples_per_item)});
  }
  return aggregate(outcomes);
}

EvalReport evaluate(const PolicyModel& policy, std::span<const double> params,
                    std::span<const EvalItem> items, const EvalOptions& opts) {
  return evaluate(policy_responder(policy, params), items, opts);
}

ConsistencyRate consistency_rate(const Responder& responder, std::span<const EvalItem> items,
                                 const EvalOptions& opts) {
  if (opts.samples_per_item < 1) {
    throw std::invalid_argument("samples_per_item must be at least 1");
  }
  ConsistencyRate out;
  std::size_t consistent = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Task& task = items[i].presented;
    for (std::size_t s = 0; s < opts.samples_per_item; ++s) {
      Stream stream = Stream::keyed(opts.seed, kConsistencyStream, i, s);
      const auto parsed = parse_tagged_response(responder(task, stream, false));
      consistent += check_consistency(parsed, task.choices).kind == Consistency::Consistent;
      ++out.samples;
    }
  }
  if (out.samples > 0) {
    out.vacuous = false;
    out.rate = static_cast<double>(consistent) / static_cast<double>(out.samples);
  }
  return out;
}

ConsistencyRate consistency_rate(const PolicyModel& policy, std::span<const double> params,
                                 std::span<const EvalItem> items, const EvalOptions& opts) {
  return consistency_rate(policy_responder(policy, params), items, opts);
}

Responder policy_responder(const PolicyModel& policy, std::span<const double> params) {
  return [&policy, params](const Task& task, Stream& stream, bool greedy) {
    return greedy ? policy.greedy(task, params).text : policy.sample(task, params, stream).text;
  };
}

}  // namespace roam
