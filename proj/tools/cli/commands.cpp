// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "roam/response_parser.hpp"
#include "roam/reward.hpp"
#include "roam/toy_env.hpp"

namespace roam::cli {
namespace {

using json = nlohmann::ordered_json;

enum : std::uint64_t { kInitStream = 31 };

std::string fixed(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

PolicyShape shape_for(const TaskFamilyConfig& env) {
  return PolicyShape{env.dim, env.num_choices, env.num_choices};
}

std::vector<Task> tasks_from_file(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return tasks_from_json(text);
  } catch (const FormatError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

EvalOptions accuracy_options(const RunConfig& cfg) {
  return {cfg.eval.seed, cfg.eval.samples_per_item, cfg.eval.greedy};
}

EvalOptions consistency_options(const RunConfig& cfg) {
  return {cfg.eval.seed, cfg.eval.consistency_samples, false};
}

void check_dimensions(const PolicyShape& shape, std::span<const Task> tasks,
                      const std::string& source) {
  for (const Task& t : tasks) {
    if (t.evidence.size() != shape.dim || t.choices.size() != shape.choices) {
      throw ValidationError("dimension mismatch: policy expects dim " +
                            std::to_string(shape.dim) + " with " +
                            std::to_string(shape.choices) + " choices, but task " +
                            std::to_string(t.id) + " in " + source + " has dim " +
                            std::to_string(t.evidence.size()) + " with " +
                            std::to_string(t.choices.size()) + " choices");
    }
  }
}

json report_json(const EvalReport& r, const ConsistencyRate& c) {
  return json::parse(eval_report_to_json(r, c));
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Ground-truth rows for grading, keyed by the JSON text of their id.
struct GradeTruth {
  ChoiceSet choices;
  GroundTruth truth;
};

std::string id_key(const json& id) { return id.dump(); }

std::map<std::string, GradeTruth> load_ground_truth(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": not valid JSON: " + e.what());
  }
  if (!doc.is_array()) throw ValidationError(path.string() + ": expected a JSON array");
  std::map<std::string, GradeTruth> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& j = doc[i];
    const std::string where = path.string() + ": element " + std::to_string(i);
    try {
      if (!j.is_object() || !j.contains("id") || !j.contains("choices") ||
          !j.contains("correct_label")) {
        throw ValidationError(where + ": requires \"id\", \"choices\" and \"correct_label\"");
      }
      std::vector<std::string> texts;
      for (const json& c : j.at("choices")) {
        texts.push_back(c.is_object() ? c.at("text").get<std::string>() : c.get<std::string>());
      }
      const auto key = j.at("correct_label").get<std::string>();
      if (key.size() != 1) throw ValidationError(where + ": correct_label must be one letter");
      GradeTruth gt{ChoiceSet(std::move(texts), ChoiceLabel(key[0])),
                    GroundTruth{ChoiceLabel(key[0]), std::nullopt}};
      if (j.contains("reference_reasoning") && !j.at("reference_reasoning").is_null()) {
        gt.truth.reference_reasoning = j.at("reference_reasoning").get<std::string>();
      }
      if (!out.emplace(id_key(j.at("id")), std::move(gt)).second) {
        throw ValidationError(where + ": duplicate id " + j.at("id").dump());
      }
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<Task> load_train_tasks(const RunConfig& cfg) {
  if (cfg.env.train_tasks) return tasks_from_file(*cfg.env.train_tasks);
  return generate_tasks(cfg.env.train);
}

std::vector<Task> load_heldout_tasks(const RunConfig& cfg) {
  if (cfg.env.heldout_tasks) return tasks_from_file(*cfg.env.heldout_tasks);
  auto family = cfg.env.train;
  family.seed = cfg.env.heldout_seed;
  family.n = cfg.env.heldout_n;
  return generate_tasks(family);
}

TrainOutcome run_training(const RunConfig& cfg, RewardMode mode, std::span<const Task> train,
                          std::span<const EvalItem> heldout) {
  const PolicyShape shape = shape_for(cfg.env.train);
  check_dimensions(shape, train, "the training set");
  for (const EvalItem& item : heldout) {
    check_dimensions(shape, std::span<const Task>(&item.presented, 1), "the held-out set");
  }
  const FactoredSoftmaxPolicy policy(shape);

  Stream init_stream = Stream::keyed(cfg.grpo.seed, kInitStream);
  std::vector<double> params =
      FactoredPolicyParams::random(shape, init_stream, cfg.init_scale).flat;

  TrainOutcome out;
  out.initial_report = evaluate(policy, params, heldout, accuracy_options(cfg));
  out.initial_consistency = consistency_rate(policy, params, heldout, consistency_options(cfg));
  out.trace = train_loop(cfg.grpo, train, policy, params, make_reward_function(mode, cfg.ladder));
  out.final_report = evaluate(policy, params, heldout, accuracy_options(cfg));
  out.final_consistency = consistency_rate(policy, params, heldout, consistency_options(cfg));
  out.checkpoint = Checkpoint{shape, std::move(params), cfg.grpo, mode, cfg.ladder};
  return out;
}

AblationReport run_ablation(const RunConfig& cfg, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ValidationError("ablation needs at least one seed");
  const auto train = load_train_tasks(cfg);
  const auto heldout_tasks = load_heldout_tasks(cfg);
  const auto heldout = randomize_all(heldout_tasks, cfg.eval.seed);

  AblationReport report;
  std::map<RewardMode, std::vector<double>> acc, cons, init;
  for (std::uint64_t seed : seeds) {
    RunConfig run = cfg;
    run.grpo.seed = seed;
    for (RewardMode mode : {RewardMode::Classical, RewardMode::Roam}) {
      const TrainOutcome t = run_training(run, mode, train, heldout);
      AblationRow row{seed,
                      mode,
                      t.initial_report.macro_average,
                      t.final_report.macro_average,
                      t.final_consistency.rate,
                      t.trace.empty() ? 0.0 : t.trace.back().mean_reward,
                      param_checksum(t.checkpoint.params)};
      acc[mode].push_back(row.accuracy);
      cons[mode].push_back(row.consistency);
      init[mode].push_back(row.initial_accuracy);
      report.rows.push_back(std::move(row));
    }
  }
  for (RewardMode mode : {RewardMode::Classical, RewardMode::Roam}) {
    report.summaries.push_back({mode, mean(acc[mode]), sample_std(acc[mode]), mean(cons[mode]),
                                sample_std(cons[mode]), mean(init[mode])});
  }
  report.accuracy_diff = report.summaries[1].accuracy_mean - report.summaries[0].accuracy_mean;
  report.consistency_diff =
      report.summaries[1].consistency_mean - report.summaries[0].consistency_mean;
  return report;
}

std::string ablation_to_csv(const AblationReport& r) {
  std::ostringstream out;
  out << "kind,seed,reward_mode,initial_accuracy,accuracy,accuracy_std,consistency,"
         "consistency_std\n";
  for (const auto& row : r.rows) {
    out << "run," << row.seed << ',' << to_string(row.mode) << ',' << fixed(row.initial_accuracy)
        << ',' << fixed(row.accuracy) << ",," << fixed(row.consistency) << ",\n";
  }
  for (const auto& s : r.summaries) {
    out << "summary,," << to_string(s.mode) << ',' << fixed(s.initial_accuracy_mean) << ','
        << fixed(s.accuracy_mean) << ',' << fixed(s.accuracy_std) << ','
        << fixed(s.consistency_mean) << ',' << fixed(s.consistency_std) << '\n';
  }
  out << "difference,,roam-classical,," << fixed(r.accuracy_diff) << ",,"
      << fixed(r.consistency_diff) << ",\n";
  return out.str();
}

std::string ablation_to_json(const AblationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back(json{{"seed", row.seed},
                        {"reward_mode", to_string(row.mode)},
                        {"initial_accuracy", row.initial_accuracy},
                        {"accuracy", row.accuracy},
                        {"consistency", row.consistency},
                        {"final_mean_reward", row.final_mean_reward},
                        {"param_checksum", row.param_checksum}});
  }
  json summaries = json::array();
  for (const auto& s : r.summaries) {
    summaries.push_back(json{{"reward_mode", to_string(s.mode)},
                             {"initial_accuracy_mean", s.initial_accuracy_mean},
                             {"accuracy_mean", s.accuracy_mean},
                             {"accuracy_std", s.accuracy_std},
                             {"consistency_mean", s.consistency_mean},
                             {"consistency_std", s.consistency_std}});
  }
  return json{{"runs", std::move(rows)},
              {"summary", std::move(summaries)},
              {"difference",
               json{{"accuracy", r.accuracy_diff}, {"consistency", r.consistency_diff}}}}
             .dump(2) +
         "\n";
}

void cmd_gen_tasks(const RunConfig& cfg, std::ostream& out) {
  const auto train = generate_tasks(cfg.env.train);
  const auto heldout = load_heldout_tasks(cfg);
  write_file(cfg.output_dir / "tasks.json", tasks_to_json(train));
  write_file(cfg.output_dir / "heldout_tasks.json", tasks_to_json(heldout));

  std::map<Subtask, std::size_t> counts;
  for (const Task& t : train) ++counts[t.subtask];
  out << "wrote " << train.size() << " tasks to " << (cfg.output_dir / "tasks.json").string()
      << " and " << heldout.size() << " held-out tasks to "
      << (cfg.output_dir / "heldout_tasks.json").string() << '\n';
  for (Subtask s : kAllSubtasks) out << "  " << to_string(s) << ": " << counts[s] << '\n';
}

void cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto train = load_train_tasks(cfg);
  const auto heldout_tasks = load_heldout_tasks(cfg);
  const auto heldout = randomize_all(heldout_tasks, cfg.eval.seed);
  const TrainOutcome t = run_training(cfg, cfg.reward_mode, train, heldout);

  std::string trace;
  for (const auto& rec : t.trace) trace += trace_record_to_json(rec) + "\n";
  write_file(cfg.output_dir / "trace.jsonl", trace);
  write_file(cfg.output_dir / "checkpoint.json", checkpoint_to_json(t.checkpoint));
  const json summary{{"reward_mode", to_string(cfg.reward_mode)},
                     {"steps", t.trace.size()},
                     {"param_checksum", param_checksum(t.checkpoint.params)},
                     {"final_mean_reward", t.trace.empty() ? 0.0 : t.trace.back().mean_reward},
                     {"initial", report_json(t.initial_report, t.initial_consistency)},
                     {"final", report_json(t.final_report, t.final_consistency)}};
  write_file(cfg.output_dir / "summary.json", summary.dump(2) + "\n");

  out << "reward mode " << to_string(cfg.reward_mode) << ", " << t.trace.size() << " steps\n"
      << "final mean reward:      "
      << fixed(t.trace.empty() ? 0.0 : t.trace.back().mean_reward) << '\n'
      << "held-out accuracy:      " << fixed(t.final_report.macro_average) << " (initial "
      << fixed(t.initial_report.macro_average) << ")\n"
      << "held-out consistency:   " << fixed(t.final_consistency.rate) << " (initial "
      << fixed(t.initial_consistency.rate) << ")\n"
      << "checkpoint checksum:    " << param_checksum(t.checkpoint.params) << '\n';
}

void cmd_ablate(const RunConfig& cfg, std::span<const std::uint64_t> seeds, std::ostream& out) {
  const AblationReport r = run_ablation(cfg, seeds);
  write_file(cfg.output_dir / "ablation.csv", ablation_to_csv(r));
  write_file(cfg.output_dir / "ablation.json", ablation_to_json(r));

  out << "seed  reward     init_acc  accuracy  consistency\n";
  for (const auto& row : r.rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-5llu %-10s %-9s %-9s %s\n",
                  static_cast<unsigned long long>(row.seed),
                  std::string(to_string(row.mode)).c_str(), fixed(row.initial_accuracy).c_str(),
                  fixed(row.accuracy).c_str(), fixed(row.consistency).c_str());
    out << line;
  }
  for (const auto& s : r.summaries) {
    out << "mean  " << to_string(s.mode) << ": accuracy " << fixed(s.accuracy_mean) << " +- "
        << fixed(s.accuracy_std) << ", consistency " << fixed(s.consistency_mean) << " +- "
        << fixed(s.consistency_std) << '\n';
  }
  out << "roam - classical: accuracy " << fixed(r.accuracy_diff) << ", consistency "
      << fixed(r.consistency_diff) << '\n';
}

void cmd_grade(const RunConfig& cfg, const std::filesystem::path& responses,
               const std::filesystem::path& ground_truth, std::ostream& out) {
  const auto truth = load_ground_truth(ground_truth);
  const std::string text = read_file(responses);

  std::string rows;
  double sum_phi = 0.0, sum_psi = 0.0, sum_total = 0.0;
  std::size_t count = 0, consistent = 0;
  std::istringstream lines(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(lines, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = responses.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw ValidationError(where + ": not a JSON object");
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("text") || !j["text"].is_string()) {
      throw ValidationError(where + ": each line needs \"id\" and a string \"text\"");
    }
    const auto it = truth.find(id_key(j["id"]));
    if (it == truth.end()) {
      throw ValidationError(where + ": no ground truth for id " + j["id"].dump());
    }
    const GradeTruth& gt = it->second;
    const auto parsed = parse_tagged_response(j["text"].get<std::string>());
    const RewardBreakdown b = roam_score(parsed, gt.truth, gt.choices, cfg.ladder);

    json row{{"line", lineno},
             {"id", j["id"]},
             {"phi", b.phi},
             {"psi", b.psi},
             {"total", b.total},
             {"row", static_cast<int>(b.row)},
             {"reason", describe(b.row)},
             {"verdict", to_string(b.verdict.kind)},
             {"derived_claim", b.verdict.derived_claim ? json(b.verdict.derived_claim->str()) : json()},
             {"answer", parsed.answer ? json(parsed.answer->str()) : json()},
             {"correct", b.correct},
             {"well_formed", parsed.well_formed}};
    if (gt.truth.reference_reasoning && parsed.reasoning) {
      row["reference_similarity"] =
          phi_reference_similarity(*parsed.reasoning, *gt.truth.reference_reasoning);
    }
    rows += row.dump() + "\n";
    sum_phi += b.phi;
    sum_psi += b.psi;
    sum_total += b.total;
    consistent += b.verdict.kind == Consistency::Consistent;
    ++count;
  }

  write_file(cfg.output_dir / "scores.jsonl", rows);
  const auto summary_path = cfg.output_dir / "grade_summary.json";
  if (count == 0) {
    std::error_code ec;
    std::filesystem::remove(summary_path, ec);
    out << "graded 0 responses\n";
    return;
  }
  const double n = static_cast<double>(count);
  const json summary{{"count", count},
                     {"mean_phi", sum_phi / n},
                     {"mean_psi", sum_psi / n},
                     {"mean_total", sum_total / n},
                     {"consistency_rate", static_cast<double>(consistent) / n}};
  write_file(summary_path, summary.dump(2) + "\n");
  out << "graded " << count << " responses: mean phi " << fixed(sum_phi / n) << ", mean psi "
      << fixed(sum_psi / n) << ", mean total " << fixed(sum_total / n) << '\n';
}

void cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint,
              const std::optional<std::filesystem::path>& tasks_path, std::ostream& out) {
  Checkpoint ck;
  try {
    ck = checkpoint_from_json(read_file(checkpoint));
  } catch (const FormatError& e) {
    throw ValidationError(checkpoint.string() + ": " + e.what());
  }
  const auto tasks = tasks_path ? tasks_from_file(*tasks_path) : load_heldout_tasks(cfg);
  check_dimensions(ck.shape, tasks, tasks_path ? tasks_path->string() : "the held-out set");
  std::unique_ptr<FactoredSoftmaxPolicy> policy;
  try {
    policy = std::make_unique<FactoredSoftmaxPolicy>(ck.shape);
  } catch (const DimensionMismatch& e) {
    throw ValidationError(checkpoint.string() + ": " + e.what());
  }

  const auto items = randomize_all(tasks, cfg.eval.seed);
  const EvalReport report = evaluate(*policy, ck.params, items, accuracy_options(cfg));
  const ConsistencyRate cons = consistency_rate(*policy, ck.params, items, consistency_options(cfg));

  write_file(cfg.output_dir / "eval_report.json", eval_report_to_json(report, cons));
  write_file(cfg.output_dir / "eval_report.csv", eval_report_to_csv(report));
  out << "evaluated " << report.num_items << " items: macro accuracy "
      << fixed(report.macro_average) << ", consistency " << fixed(cons.rate);
  if (report.discrimination_balanced) {
    out << ", balanced discrimination " << fixed(*report.discrimination_balanced);
  }
  out << '\n';
  if (cons.vacuous) out << "warning: no responses scored; consistency is vacuous\n";
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"GRPO with a reasoned-outcome reward on a synthetic inspection task family",
               "roamgrpo"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 1 validation error, 2 runtime/numeric failure.\n\n"
             "Defaults (override any subset with --config FILE):\n" +
             run_config_to_json(RunConfig{}));

  std::string config_path, out_dir, reward, responses, ground_truth, checkpoint, tasks;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  };

  auto* gen = app.add_subcommand("gen-tasks", "Write training and held-out task sets");
  common(gen);
  gen->add_option("--seed", seed, "Override env.seed");

  auto* train = app.add_subcommand("train", "Train one policy; write trace and checkpoint");
  common(train);
  train->add_option("--seed", seed, "Override grpo.seed");
  train->add_option("--reward", reward, "Reward: roam or classical")
      ->check(CLI::IsMember({"roam", "classical"}));

  auto* ablate = app.add_subcommand("ablate", "Train classical and roam policies per seed");
  common(ablate);
  ablate->add_option("--seeds", seeds, "Comma-separated training seeds")->delimiter(',');

  auto* grade = app.add_subcommand("grade", "Score response texts against ground truth");
  common(grade);
  grade->add_option("--responses", responses, "JSONL of {\"id\", \"text\"}")->required();
  grade->add_option("--ground-truth", ground_truth, "JSON array of items")->required();

  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint on a task set");
  common(evalc);
  evalc->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  evalc->add_option("--tasks", tasks, "Task-set JSON (default: configured held-out set)");
  evalc->add_option("--seed", seed, "Override eval.seed");

  auto* show = app.add_subcommand("config", "Print the effective configuration");
  common(show);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!reward.empty()) cfg.reward_mode = *reward_mode_from_string(reward);

    if (gen->parsed()) {
      if (seed) cfg.env.train.seed = *seed;
      cmd_gen_tasks(cfg, out);
    } else if (train->parsed()) {
      if (seed) cfg.grpo.seed = *seed;
      cmd_train(cfg, out);
    } else if (ablate->parsed()) {
      cmd_ablate(cfg, seeds.empty() ? cfg.ablation_seeds : seeds, out);
    } else if (grade->parsed()) {
      cmd_grade(cfg, responses, ground_truth, out);
    } else if (evalc->parsed()) {
      if (seed) cfg.eval.seed = *seed;
      cmd_eval(cfg, checkpoint,
               tasks.empty() ? std::nullopt : std::optional<std::filesystem::path>(tasks), out);
    } else if (show->parsed()) {
      out << run_config_to_json(cfg);
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InvalidMix& e) {
    err << "error: env." << e.field() << ": " << e.what() << '\n';
    return kExitValidation;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NonFiniteLoss& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace roam::cli
