// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#include "roam/io.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace roam {
namespace {

using json = nlohmann::ordered_json;

json parse_document(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(where + ": missing \"" + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw FormatError(where + ": \"" + key + "\" has the wrong type");
  }
}

template <class T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
  return obj.contains(key) ? field<T>(obj, key, where) : fallback;
}

ChoiceLabel label_field(const json& obj, const char* key, const std::string& where) {
  const auto s = field<std::string>(obj, key, where);
  if (s.size() != 1 || s[0] < 'A' || s[0] > 'Z') {
    throw FormatError(where + ": \"" + key + "\" must be a single uppercase letter");
  }
  return ChoiceLabel(s[0]);
}

json grpo_json(const GrpoConfig& c) {
  return json{{"group_size", c.group_size},       {"batch_size", c.batch_size},
              {"total_steps", c.total_steps},     {"clip_eps", c.clip_eps},
              {"kl_coef", c.kl_coef},             {"learning_rate", c.learning_rate},
              {"std_floor", c.std_floor},         {"seed", c.seed}};
}

GrpoConfig grpo_from(const json& j) {
  const std::string where = "grpo config";
  GrpoConfig c;
  c.group_size = field<std::size_t>(j, "group_size", where);
  c.batch_size = field<std::size_t>(j, "batch_size", where);
  c.total_steps = field<std::size_t>(j, "total_steps", where);
  c.clip_eps = field<double>(j, "clip_eps", where);
  c.kl_coef = field<double>(j, "kl_coef", where);
  c.learning_rate = field<double>(j, "learning_rate", where);
  c.std_floor = field<double>(j, "std_floor", where);
  c.seed = field<std::uint64_t>(j, "seed", where);
  return c;
}

json ladder_json(const RewardLadder& l) {
  return json{{"w_inconsistent", l.w_inconsistent}, {"w_present", l.w_present},
              {"w_consistent", l.w_consistent},     {"w_correct", l.w_correct},
              {"w_full", l.w_full}};
}

std::string fmt_accuracy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string tasks_to_json(std::span<const Task> tasks) {
  json arr = json::array();
  for (const Task& t : tasks) {
    json choices = json::array();
    for (const Choice& c : t.choices.choices()) {
      choices.push_back(json{{"label", c.label.str()}, {"text", c.text}});
    }
    arr.push_back(json{{"id", t.id},
                       {"subtask", to_string(t.subtask)},
                       {"dataset_tag", t.dataset_tag},
                       {"choices", std::move(choices)},
                       {"correct_label", t.choices.correct_label().str()},
                       {"normal", t.normal},
                       {"evidence", t.evidence}});
  }
  return arr.dump(1) + "\n";
}

std::vector<Task> tasks_from_json(std::string_view text) {
  const json doc = parse_document(text, "task set");
  if (!doc.is_array()) throw FormatError("task set: expected a JSON array of tasks");
  std::vector<Task> tasks;
  tasks.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& j = doc[i];
    const std::string where = "task set element " + std::to_string(i);
    if (!j.is_object()) throw FormatError(where + ": not an object");
    const auto sub_name = field<std::string>(j, "subtask", where);
    const auto subtask = subtask_from_string(sub_name);
    if (!subtask) throw FormatError(where + ": unknown subtask \"" + sub_name + "\"");

    const auto& choices = j.find("choices");
    if (choices == j.end() || !choices->is_array()) {
      throw FormatError(where + ": \"choices\" must be an array");
    }
    std::vector<std::string> texts;
    for (std::size_t c = 0; c < choices->size(); ++c) {
      const json& cj = (*choices)[c];
      if (!cj.is_object()) throw FormatError(where + ": choice " + std::to_string(c) + " is not an object");
      const auto label = label_field(cj, "label", where);
      if (label.index() != c) {
        throw FormatError(where + ": choice labels must run A, B, C, ... in order");
      }
      texts.push_back(field<std::string>(cj, "text", where));
    }
    try {
      tasks.push_back(Task{field<std::int64_t>(j, "id", where), *subtask,
                           field<std::string>(j, "dataset_tag", where),
                           field<std::vector<double>>(j, "evidence", where),
                           ChoiceSet(std::move(texts), label_field(j, "correct_label", where)),
                           field_or<bool>(j, "normal", false, where)});
    } catch (const std::invalid_argument& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return tasks;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const json doc{{"format", "roam-checkpoint/1"},
                 {"shape",
                  json{{"dim", ckpt.shape.dim},
                       {"claims", ckpt.shape.claims},
                       {"choices", ckpt.shape.choices}}},
                 {"reward_mode", to_string(ckpt.reward_mode)},
                 {"ladder", ladder_json(ckpt.ladder)},
                 {"grpo", grpo_json(ckpt.config)},
                 {"param_checksum", param_checksum(ckpt.params)},
                 {"params", ckpt.params}};
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  const json doc = parse_document(text, "checkpoint");
  const std::string where = "checkpoint";
  if (!doc.is_object()) throw FormatError("checkpoint: expected a JSON object");
  Checkpoint ck;
  const auto shape = field<json>(doc, "shape", where);
  ck.shape = PolicyShape{field<std::size_t>(shape, "dim", where),
                         field<std::size_t>(shape, "claims", where),
                         field<std::size_t>(shape, "choices", where)};
  ck.params = field<std::vector<double>>(doc, "params", where);
  if (ck.params.size() != ck.shape.num_params()) {
    throw FormatError("checkpoint: shape expects " + std::to_string(ck.shape.num_params()) +
                      " parameters, file has " + std::to_string(ck.params.size()));
  }
  const auto mode = reward_mode_from_string(field<std::string>(doc, "reward_mode", where));
  if (!mode) throw FormatError("checkpoint: unknown reward_mode");
  ck.reward_mode = *mode;
  const auto ladder = field<json>(doc, "ladder", where);
  ck.ladder = RewardLadder{field<double>(ladder, "w_inconsistent", where),
                           field<double>(ladder, "w_present", where),
                           field<double>(ladder, "w_consistent", where),
                           field<double>(ladder, "w_correct", where),
                           field<double>(ladder, "w_full", where)};
  ck.config = grpo_from(field<json>(doc, "grpo", where));
  const auto stored = field<std::string>(doc, "param_checksum", where);
  if (stored != param_checksum(ck.params)) {
    throw FormatError("checkpoint: parameter checksum mismatch (file " + stored +
                      ", computed " + param_checksum(ck.params) + ")");
  }
  return ck;
}

std::string trace_record_to_json(const TrainingStepRecord& r) {
  return json{{"step", r.step},
              {"mean_reward", r.mean_reward},
              {"consistency_rate", r.consistency_rate},
              {"objective", r.objective},
              {"surrogate", r.surrogate},
              {"kl", r.kl},
              {"grad_norm", r.grad_norm},
              {"param_checksum", r.param_checksum}}
      .dump();
}

TrainingStepRecord trace_record_from_json(std::string_view line) {
  const json j = parse_document(line, "trace record");
  const std::string where = "trace record";
  return {field<std::size_t>(j, "step", where),
          field<double>(j, "mean_reward", where),
          field<double>(j, "consistency_rate", where),
          field<double>(j, "objective", where),
          field<double>(j, "surrogate", where),
          field<double>(j, "kl", where),
          field<double>(j, "grad_norm", where),
          field<std::string>(j, "param_checksum", where)};
}

std::string grpo_config_to_json(const GrpoConfig& cfg) { return grpo_json(cfg).dump(); }

std::string eval_report_to_json(const EvalReport& report,
                                const std::optional<ConsistencyRate>& consistency) {
  json per_subtask = json::object();
  json counts = json::object();
  for (Subtask s : kAllSubtasks) {
    if (auto it = report.per_subtask_accuracy.find(s); it != report.per_subtask_accuracy.end()) {
      per_subtask[std::string(to_string(s))] = it->second;
      counts[std::string(to_string(s))] = report.counts.at(s);
    }
  }
  json per_dataset = json::object();
  for (const auto& [tag, acc] : report.per_dataset_accuracy) per_dataset[tag] = acc;
  json cells = json::object();
  for (const auto& [tag, row] : report.cells) {
    json r = json::object();
    for (const auto& [s, acc] : row) r[std::string(to_string(s))] = acc;
    cells[tag] = std::move(r);
  }
  json doc{{"num_items", report.num_items},
           {"macro_average", report.macro_average},
           {"dataset_macro_average", report.dataset_macro_average},
           {"discrimination_balanced",
            report.discrimination_balanced ? json(*report.discrimination_balanced) : json()},
           {"per_subtask_accuracy", std::move(per_subtask)},
           {"per_dataset_accuracy", std::move(per_dataset)},
           {"cells", std::move(cells)},
           {"counts", std::move(counts)}};
  if (consistency) {
    doc["consistency"] = json{{"rate", consistency->rate},
                              {"samples", consistency->samples},
                              {"vacuous", consistency->vacuous}};
  }
  return doc.dump(2) + "\n";
}

std::string eval_report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "scope";
  for (Subtask s : kAllSubtasks) out << ',' << to_string(s);
  out << ",average\n";

  out << "overall";
  for (Subtask s : kAllSubtasks) {
    out << ',';
    if (s == Subtask::AnomalyDiscrimination) {
      if (report.discrimination_balanced) out << fmt_accuracy(*report.discrimination_balanced);
    } else if (auto it = report.per_subtask_accuracy.find(s);
               it != report.per_subtask_accuracy.end()) {
      out << fmt_accuracy(it->second);
    }
  }
  out << ',' << fmt_accuracy(report.macro_average) << '\n';

  for (const auto& [tag, row] : report.cells) {
    out << tag;
    for (Subtask s : kAllSubtasks) {
      out << ',';
      if (auto it = row.find(s); it != row.end()) out << fmt_accuracy(it->second);
    }
    out << ',' << fmt_accuracy(report.per_dataset_accuracy.at(tag)) << '\n';
  }
  return out.str();
}

}  // namespace roam
