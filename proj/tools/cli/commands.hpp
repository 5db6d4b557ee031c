// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "roam/eval.hpp"
#include "roam/grpo.hpp"
#include "roam/io.hpp"
#include "run_config.hpp"

namespace roam::cli {

// Exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Training and held-out task sets as the config describes them.
std::vector<Task> load_train_tasks(const RunConfig& cfg);
std::vector<Task> load_heldout_tasks(const RunConfig& cfg);

struct TrainOutcome {
  TrainingTrace trace;
  Checkpoint checkpoint;
  EvalReport initial_report;
  EvalReport final_report;
  ConsistencyRate initial_consistency;
  ConsistencyRate final_consistency;
};

/// One training run, no files touched. Initial parameters depend only on
/// cfg.grpo.seed and cfg.init_scale, never on the reward mode.
TrainOutcome run_training(const RunConfig& cfg, RewardMode mode,
                          std::span<const Task> train, std::span<const EvalItem> heldout);

struct AblationRow {
  std::uint64_t seed = 0;
  RewardMode mode = RewardMode::Roam;
  double initial_accuracy = 0.0;
  double accuracy = 0.0;
  double consistency = 0.0;
  double final_mean_reward = 0.0;
  std::string param_checksum;
};

struct AblationSummary {
  RewardMode mode = RewardMode::Roam;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;  // sample std across seeds
  double consistency_mean = 0.0;
  double consistency_std = 0.0;
  double initial_accuracy_mean = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;            // seeds x {classical, roam}
  std::vector<AblationSummary> summaries;   // classical, roam
  double accuracy_diff = 0.0;               // roam - classical
  double consistency_diff = 0.0;            // roam - classical
};

AblationReport run_ablation(const RunConfig& cfg, std::span<const std::uint64_t> seeds);
std::string ablation_to_csv(const AblationReport& report);
std::string ablation_to_json(const AblationReport& report);

// Commands. Each throws ValidationError / RuntimeFailure (or a core error)
// and writes its artifacts under cfg.output_dir.
void cmd_gen_tasks(const RunConfig& cfg, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& out);
void cmd_ablate(const RunConfig& cfg, std::span<const std::uint64_t> seeds, std::ostream& out);
void cmd_grade(const RunConfig& cfg, const std::filesystem::path& responses,
               const std::filesystem::path& ground_truth, std::ostream& out);
void cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint,
              const std::optional<std::filesystem::path>& tasks, std::ostream& out);

/// Parses arguments, dispatches, and maps errors to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace roam::cli
