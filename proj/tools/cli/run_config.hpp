// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "roam/grpo.hpp"
#include "roam/reward.hpp"
#include "roam/toy_env.hpp"

namespace roam::cli {

/// Bad user input: config, flags, or input files. Exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while running: I/O on outputs, numerics. Exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnvSettings {
  TaskFamilyConfig train{.seed = 1};
  std::size_t heldout_n = 700;
  std::uint64_t heldout_seed = 2;
  /// Optional task-set files used instead of generating.
  std::optional<std::filesystem::path> train_tasks;
  std::optional<std::filesystem::path> heldout_tasks;
};

struct EvalSettings {
  std::uint64_t seed = 5;
  std::size_t samples_per_item = 1;
  bool greedy = true;
  /// Sampled responses per item for the consistency rate.
  std::size_t consistency_samples = 4;
};

struct RunConfig {
  GrpoConfig grpo{.seed = 1};
  RewardLadder ladder;
  EnvSettings env;
  RewardMode reward_mode = RewardMode::Roam;
  EvalSettings eval;
  double init_scale = 0.0;
  std::vector<std::uint64_t> ablation_seeds = {1, 2, 3, 4, 5};
  std::filesystem::path output_dir = "out";

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Strict: unknown keys are rejected so typos do not silently fall back to
/// defaults. Missing keys keep their defaults.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename, so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace roam::cli
