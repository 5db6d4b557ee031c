// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "roam/io.hpp"

namespace roam::cli {
namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  const std::set<std::string_view> allowed(known);
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ValidationError(where + "." + key + ": unknown setting");
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    dst = it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

void read_mix(const json& j, SubtaskMix& mix, const std::string& where) {
  if (j.is_array()) {
    if (j.size() != kNumSubtasks) {
      throw ValidationError(where + ": expected " + std::to_string(kNumSubtasks) +
                            " proportions");
    }
    for (std::size_t i = 0; i < kNumSubtasks; ++i) {
      if (!j[i].is_number()) throw ValidationError(where + ": proportions must be numbers");
      mix[i] = j[i].get<double>();
    }
    return;
  }
  if (!j.is_object()) throw ValidationError(where + ": expected an object or array");
  mix.fill(0.0);
  for (const auto& [key, value] : j.items()) {
    const auto s = subtask_from_string(key);
    if (!s) throw ValidationError(where + "." + key + ": unknown subtask");
    if (!value.is_number()) throw ValidationError(where + "." + key + ": must be a number");
    mix[static_cast<std::size_t>(*s)] = value.get<double>();
  }
}

}  // namespace

void RunConfig::validate() const {
  try {
    grpo.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("grpo: ") + e.what());
  }
  try {
    ladder.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  try {
    auto probe = env.train;
    probe.n = 1;
    generate_tasks(probe);
  } catch (const InvalidMix& e) {
    throw ValidationError("env." + e.field() + ": " + e.what());
  }
  if (env.train.n < 1) throw ValidationError("env.n: must be at least 1");
  if (env.heldout_n < 1) throw ValidationError("env.heldout_n: must be at least 1");
  if (eval.samples_per_item < 1) throw ValidationError("eval.samples_per_item: must be >= 1");
  if (eval.consistency_samples < 1) {
    throw ValidationError("eval.consistency_samples: must be >= 1");
  }
  if (!(init_scale >= 0.0)) throw ValidationError("policy.init_scale: must be >= 0");
}

RunConfig parse_run_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, "config",
                 {"grpo", "ladder", "env", "reward_mode", "eval", "policy", "ablation",
                  "output_dir"});
  RunConfig cfg;

  if (auto g = doc.find("grpo"); g != doc.end()) {
    reject_unknown(*g, "grpo",
                   {"group_size", "batch_size", "total_steps", "clip_eps", "kl_coef",
                    "learning_rate", "std_floor", "seed"});
    read(*g, "group_size", cfg.grpo.group_size, "grpo");
    read(*g, "batch_size", cfg.grpo.batch_size, "grpo");
    read(*g, "total_steps", cfg.grpo.total_steps, "grpo");
    read(*g, "clip_eps", cfg.grpo.clip_eps, "grpo");
    read(*g, "kl_coef", cfg.grpo.kl_coef, "grpo");
    read(*g, "learning_rate", cfg.grpo.learning_rate, "grpo");
    read(*g, "std_floor", cfg.grpo.std_floor, "grpo");
    read(*g, "seed", cfg.grpo.seed, "grpo");
  }
  if (auto l = doc.find("ladder"); l != doc.end()) {
    reject_unknown(*l, "ladder",
                   {"w_inconsistent", "w_present", "w_consistent", "w_correct", "w_full"});
    read(*l, "w_inconsistent", cfg.ladder.w_inconsistent, "ladder");
    read(*l, "w_present", cfg.ladder.w_present, "ladder");
    read(*l, "w_consistent", cfg.ladder.w_consistent, "ladder");
    read(*l, "w_correct", cfg.ladder.w_correct, "ladder");
    read(*l, "w_full", cfg.ladder.w_full, "ladder");
  }
  if (auto e = doc.find("env"); e != doc.end()) {
    reject_unknown(*e, "env",
                   {"seed", "n", "dim", "num_choices", "difficulty", "subtask_mix",
                    "heldout_n", "heldout_seed", "train_tasks", "heldout_tasks"});
    auto& t = cfg.env.train;
    read(*e, "seed", t.seed, "env");
    read(*e, "n", t.n, "env");
    read(*e, "dim", t.dim, "env");
    read(*e, "num_choices", t.num_choices, "env");
    read(*e, "difficulty", t.difficulty, "env");
    if (auto m = e->find("subtask_mix"); m != e->end()) {
      read_mix(*m, t.subtask_mix, "env.subtask_mix");
    }
    read(*e, "heldout_n", cfg.env.heldout_n, "env");
    read(*e, "heldout_seed", cfg.env.heldout_seed, "env");
    std::string path;
    if (e->contains("train_tasks")) {
      read(*e, "train_tasks", path, "env");
      cfg.env.train_tasks = path;
    }
    if (e->contains("heldout_tasks")) {
      read(*e, "heldout_tasks", path, "env");
      cfg.env.heldout_tasks = path;
    }
  }
  if (auto r = doc.find("reward_mode"); r != doc.end()) {
    const auto mode = r->is_string() ? reward_mode_from_string(r->get<std::string>())
                                     : std::nullopt;
    if (!mode) throw ValidationError("reward_mode: must be \"roam\" or \"classical\"");
    cfg.reward_mode = *mode;
  }
  if (auto v = doc.find("eval"); v != doc.end()) {
    reject_unknown(*v, "eval", {"seed", "samples_per_item", "greedy", "consistency_samples"});
    read(*v, "seed", cfg.eval.seed, "eval");
    read(*v, "samples_per_item", cfg.eval.samples_per_item, "eval");
    read(*v, "greedy", cfg.eval.greedy, "eval");
    read(*v, "consistency_samples", cfg.eval.consistency_samples, "eval");
  }
  if (auto p = doc.find("policy"); p != doc.end()) {
    reject_unknown(*p, "policy", {"init_scale"});
    read(*p, "init_scale", cfg.init_scale, "policy");
  }
  if (auto a = doc.find("ablation"); a != doc.end()) {
    reject_unknown(*a, "ablation", {"seeds"});
    read(*a, "seeds", cfg.ablation_seeds, "ablation");
  }
  if (doc.contains("output_dir")) {
    std::string dir;
    read(doc, "output_dir", dir, "config");
    cfg.output_dir = dir;
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path));
}

std::string run_config_to_json(const RunConfig& cfg) {
  const auto& t = cfg.env.train;
  json mix = json::object();
  for (Subtask s : kAllSubtasks) {
    mix[std::string(to_string(s))] = t.subtask_mix[static_cast<std::size_t>(s)];
  }
  json env{{"seed", t.seed},
           {"n", t.n},
           {"dim", t.dim},
           {"num_choices", t.num_choices},
           {"difficulty", t.difficulty},
           {"subtask_mix", std::move(mix)},
           {"heldout_n", cfg.env.heldout_n},
           {"heldout_seed", cfg.env.heldout_seed}};
  if (cfg.env.train_tasks) env["train_tasks"] = cfg.env.train_tasks->string();
  if (cfg.env.heldout_tasks) env["heldout_tasks"] = cfg.env.heldout_tasks->string();

  const json doc{
      {"grpo", json::parse(grpo_config_to_json(cfg.grpo))},
      {"ladder",
       json{{"w_inconsistent", cfg.ladder.w_inconsistent},
            {"w_present", cfg.ladder.w_present},
            {"w_consistent", cfg.ladder.w_consistent},
            {"w_correct", cfg.ladder.w_correct},
            {"w_full", cfg.ladder.w_full}}},
      {"env", std::move(env)},
      {"reward_mode", to_string(cfg.reward_mode)},
      {"eval",
       json{{"seed", cfg.eval.seed},
            {"samples_per_item", cfg.eval.samples_per_item},
            {"greedy", cfg.eval.greedy},
            {"consistency_samples", cfg.eval.consistency_samples}}},
      {"policy", json{{"init_scale", cfg.init_scale}}},
      {"ablation", json{{"seeds", cfg.ablation_seeds}}},
      {"output_dir", cfg.output_dir.string()}};
  return doc.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw ValidationError("error reading " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw RuntimeFailure("cannot create directory " + path.parent_path().string() + ": " +
                           ec.message());
    }
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw RuntimeFailure("error writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw RuntimeFailure("cannot move " + tmp.string() + " to " + path.string());
}

}  // namespace roam::cli
