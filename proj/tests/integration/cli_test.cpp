// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "test_support.hpp"

namespace roam::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "roamgrpo");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("roamgrpo_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }
  std::string out_dir(const std::string& name = "out") const { return (dir_ / name).string(); }

  /// A small but complete configuration file.
  std::string small_config(const std::string& extra_grpo = "",
                           const std::string& extra_env = "") const {
    const auto p = path("small.json");
    spit(p, R"({"grpo": {"total_steps": 60, "seed": 4)" + extra_grpo +
                R"(}, "env": {"n": 140, "heldout_n": 140)" + extra_env + "}}");
    return p.string();
  }

  fs::path dir_;
};

// --- help and configuration ------------------------------------------------------

TEST_F(CliTest, HelpListsDefaultsAndExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("\"learning_rate\": 0.1"), std::string::npos);
  EXPECT_NE(r.out.find("gen-tasks"), std::string::npos);
}

TEST_F(CliTest, CommittedExampleConfigMatchesDefaults) {
  const auto text = slurp(fs::path(ROAM_SOURCE_DIR) / "configs" / "default.json");
  ASSERT_FALSE(text.empty());
  EXPECT_EQ(run_config_to_json(parse_run_config(text)), run_config_to_json(RunConfig{}));
  EXPECT_EQ(text, run_config_to_json(RunConfig{}));
}

TEST_F(CliTest, UnknownFlagOrSubcommandIsValidationError) {
  EXPECT_EQ(run({"train", "--bogus"}).code, kExitValidation);
  EXPECT_EQ(run({"fly"}).code, kExitValidation);
  EXPECT_EQ(run({}).code, kExitValidation);
  EXPECT_EQ(run({"train", "--reward", "best"}).code, kExitValidation);
}

TEST_F(CliTest, UnknownConfigKeyIsNamed) {
  spit(path("c.json"), R"({"grpo": {"learnin_rate": 0.5}})");
  const auto r = run({"config", "--config", path("c.json").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("grpo.learnin_rate"), std::string::npos) << r.err;
}

TEST_F(CliTest, InvalidValuesAreNamed) {
  spit(path("c.json"), R"({"grpo": {"group_size": 1}})");
  auto r = run({"config", "--config", path("c.json").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("group_size"), std::string::npos) << r.err;

  spit(path("c.json"), R"({"ladder": {"w_correct": 0.05}})");
  r = run({"config", "--config", path("c.json").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("w_correct"), std::string::npos) << r.err;

  spit(path("c.json"), R"({"reward_mode": "fancy"})");
  EXPECT_EQ(run({"config", "--config", path("c.json").string()}).code, kExitValidation);

  spit(path("c.json"), "{ not json");
  EXPECT_EQ(run({"config", "--config", path("c.json").string()}).code, kExitValidation);
}

TEST_F(CliTest, SubtaskMixAcceptsObjectOrArray) {
  spit(path("c.json"), R"({"env": {"subtask_mix": {"defect_analysis": 0.5,
                                                   "object_analysis": 0.5}}})");
  auto r = run({"gen-tasks", "--config", path("c.json").string(), "--out", out_dir()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("defect_analysis: 350"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("anomaly_discrimination: 0"), std::string::npos) << r.out;

  spit(path("c.json"), R"({"env": {"subtask_mix": [1, 0, 0, 0, 0, 0, 0]}})");
  r = run({"gen-tasks", "--config", path("c.json").string(), "--out", out_dir()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("anomaly_discrimination: 700"), std::string::npos) << r.out;
}

// --- gen-tasks ------------------------------------------------------------------------

TEST_F(CliTest, GenTasksWritesRequestedCount) {
  const auto r = run({"gen-tasks", "--out", out_dir()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto tasks = tasks_from_json(slurp(path("out/tasks.json")));
  EXPECT_EQ(tasks.size(), 700u);
  EXPECT_EQ(tasks_from_json(slurp(path("out/heldout_tasks.json"))).size(), 700u);
  EXPECT_NE(r.out.find("700 tasks"), std::string::npos);
  EXPECT_NE(r.out.find("object_analysis: 100"), std::string::npos) << r.out;
}

TEST_F(CliTest, GenTasksIsByteIdenticalOnRerun) {
  ASSERT_EQ(run({"gen-tasks", "--out", out_dir("a")}).code, kExitOk);
  ASSERT_EQ(run({"gen-tasks", "--out", out_dir("b")}).code, kExitOk);
  EXPECT_EQ(slurp(path("a/tasks.json")), slurp(path("b/tasks.json")));
  EXPECT_EQ(slurp(path("a/heldout_tasks.json")), slurp(path("b/heldout_tasks.json")));
  ASSERT_EQ(run({"gen-tasks", "--out", out_dir("c"), "--seed", "9"}).code, kExitOk);
  EXPECT_NE(slurp(path("a/tasks.json")), slurp(path("c/tasks.json")));
}

TEST_F(CliTest, GenTasksRejectsInvalidMix) {
  spit(path("c.json"), R"({"env": {"subtask_mix": [0.5, 0.5, 0.5, 0, 0, 0, 0]}})");
  const auto r = run({"gen-tasks", "--config", path("c.json").string(), "--out", out_dir()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("subtask_mix"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("out/tasks.json")));
}

// --- train ------------------------------------------------------------------------------

TEST_F(CliTest, TrainWritesTraceCheckpointAndSummary) {
  const auto r = run({"train", "--out", out_dir()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto trace = lines(slurp(path("out/trace.jsonl")));
  ASSERT_EQ(trace.size(), 1000u);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_EQ(trace_record_from_json(trace[i]).step, i);
  }
  const auto ck = checkpoint_from_json(slurp(path("out/checkpoint.json")));
  EXPECT_EQ(trace_record_from_json(trace.back()).param_checksum, param_checksum(ck.params));
  EXPECT_EQ(ck.reward_mode, RewardMode::Roam);
  const auto summary = json::parse(slurp(path("out/summary.json")));
  EXPECT_EQ(summary["steps"].get<int>(), 1000);
  EXPECT_NE(r.out.find("final mean reward"), std::string::npos);
  EXPECT_NE(r.out.find("held-out accuracy"), std::string::npos);
  EXPECT_NE(r.out.find("held-out consistency"), std::string::npos);
}

TEST_F(CliTest, TrainIsDeterministic) {
  const auto cfg = small_config();
  ASSERT_EQ(run({"train", "--config", cfg, "--out", out_dir("a")}).code, kExitOk);
  ASSERT_EQ(run({"train", "--config", cfg, "--out", out_dir("b")}).code, kExitOk);
  EXPECT_EQ(slurp(path("a/trace.jsonl")), slurp(path("b/trace.jsonl")));
  EXPECT_EQ(slurp(path("a/checkpoint.json")), slurp(path("b/checkpoint.json")));
  EXPECT_EQ(slurp(path("a/summary.json")), slurp(path("b/summary.json")));
}

TEST_F(CliTest, TrainSeedAndRewardOverrides) {
  const auto cfg = small_config();
  ASSERT_EQ(run({"train", "--config", cfg, "--out", out_dir("a")}).code, kExitOk);
  ASSERT_EQ(run({"train", "--config", cfg, "--out", out_dir("b"), "--seed", "5"}).code,
            kExitOk);
  ASSERT_EQ(run({"train", "--config", cfg, "--out", out_dir("c"), "--reward", "classical"}).code,
            kExitOk);
  EXPECT_NE(slurp(path("a/trace.jsonl")), slurp(path("b/trace.jsonl")));
  const auto c = checkpoint_from_json(slurp(path("c/checkpoint.json")));
  EXPECT_EQ(c.reward_mode, RewardMode::Classical);
  EXPECT_EQ(checkpoint_from_json(slurp(path("b/checkpoint.json"))).config.seed, 5u);
}

TEST_F(CliTest, ZeroLearningRateKeepsInitialAccuracy) {
  const auto cfg = small_config(R"(, "learning_rate": 0)");
  ASSERT_EQ(run({"train", "--config", cfg, "--out", out_dir()}).code, kExitOk);
  const auto s = json::parse(slurp(path("out/summary.json")));
  EXPECT_EQ(s["final"]["macro_average"], s["initial"]["macro_average"]);
  EXPECT_EQ(s["final"]["per_subtask_accuracy"], s["initial"]["per_subtask_accuracy"]);
}

TEST_F(CliTest, TrainUsesTaskFilesWhenGiven) {
  ASSERT_EQ(run({"gen-tasks", "--config", small_config(), "--out", out_dir("t")}).code, kExitOk);
  spit(path("c.json"), R"({"grpo": {"total_steps": 5}, "env": {"train_tasks": ")" +
                           path("t/tasks.json").string() + R"(", "heldout_tasks": ")" +
                           path("t/heldout_tasks.json").string() + R"("}})");
  const auto r = run({"train", "--config", path("c.json").string(), "--out", out_dir()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(slurp(path("out/summary.json")))["final"]["num_items"].get<int>(), 140);

  spit(path("c.json"), R"({"env": {"train_tasks": ")" + path("missing.json").string() + "\"}}");
  EXPECT_EQ(run({"train", "--config", path("c.json").string(), "--out", out_dir("x")}).code,
            kExitValidation);
}

// --- ablate -------------------------------------------------------------------------------

TEST_F(CliTest, AblateTableShape) {
  const auto r = run({"ablate", "--config", small_config(), "--out", out_dir(), "--seeds", "3,4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto csv = lines(slurp(path("out/ablation.csv")));
  ASSERT_EQ(csv.size(), 1u + 4u + 2u + 1u);
  std::size_t runs = 0, summaries = 0;
  for (const auto& l : csv) {
    runs += l.rfind("run,", 0) == 0;
    summaries += l.rfind("summary,", 0) == 0;
  }
  EXPECT_EQ(runs, 4u);
  EXPECT_EQ(summaries, 2u);

  const auto j = json::parse(slurp(path("out/ablation.json")));
  ASSERT_EQ(j["runs"].size(), 4u);
  ASSERT_EQ(j["summary"].size(), 2u);
  EXPECT_EQ(j["summary"][0]["reward_mode"], "classical");
  EXPECT_EQ(j["summary"][1]["reward_mode"], "roam");
  const double acc_diff = j["summary"][1]["accuracy_mean"].get<double>() -
                          j["summary"][0]["accuracy_mean"].get<double>();
  const double cons_diff = j["summary"][1]["consistency_mean"].get<double>() -
                           j["summary"][0]["consistency_mean"].get<double>();
  EXPECT_DOUBLE_EQ(j["difference"]["accuracy"].get<double>(), acc_diff);
  EXPECT_DOUBLE_EQ(j["difference"]["consistency"].get<double>(), cons_diff);
  // Identical initialization for both reward modes of a seed.
  EXPECT_EQ(j["runs"][0]["initial_accuracy"], j["runs"][1]["initial_accuracy"]);
}

TEST_F(CliTest, AblateUsesConfiguredSeeds) {
  spit(path("c.json"), R"({"grpo": {"total_steps": 5}, "env": {"n": 50, "heldout_n": 50},
                          "ablation": {"seeds": [7]}})");
  ASSERT_EQ(run({"ablate", "--config", path("c.json").string(), "--out", out_dir()}).code,
            kExitOk);
  const auto j = json::parse(slurp(path("out/ablation.json")));
  ASSERT_EQ(j["runs"].size(), 2u);
  EXPECT_EQ(j["runs"][0]["seed"].get<int>(), 7);
}

// --- grade --------------------------------------------------------------------------------

class GradeTest : public CliTest {
 protected:
  void SetUp() override {
    CliTest::SetUp();
    spit(path("cfg.json"), R"({"env": {"n": 30}})");
    ASSERT_EQ(run({"gen-tasks", "--config", path("cfg.json").string(), "--out", out_dir("t")})
                  .code,
              kExitOk);
    tasks_ = tasks_from_json(slurp(path("t/tasks.json")));
  }
  Result grade(const std::string& responses) {
    spit(path("responses.jsonl"), responses);
    return run({"grade", "--responses", path("responses.jsonl").string(), "--ground-truth",
                path("t/tasks.json").string(), "--out", out_dir()});
  }
  std::vector<Task> tasks_;
};

TEST_F(GradeTest, ConsistentCorrectResponsesScoreOne) {
  std::string responses;
  for (const auto& t : tasks_) {
    const auto key = t.choices.correct_label();
    responses += json{{"id", t.id}, {"text", render_tagged_response(claim_text(t, key.index()), key)}}
                     .dump() +
                 "\n";
  }
  const auto r = grade(responses);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = lines(slurp(path("out/scores.jsonl")));
  ASSERT_EQ(rows.size(), tasks_.size());
  for (const auto& row : rows) EXPECT_EQ(json::parse(row)["total"].get<double>(), 1.0) << row;
  const auto summary = json::parse(slurp(path("out/grade_summary.json")));
  EXPECT_EQ(summary["count"].get<std::size_t>(), tasks_.size());
  EXPECT_DOUBLE_EQ(summary["mean_total"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(summary["mean_phi"].get<double>(), 0.1);
  EXPECT_DOUBLE_EQ(summary["mean_psi"].get<double>(), 0.9);
}

TEST_F(GradeTest, EmptyResponsesGiveEmptyScoresWithoutSummary) {
  const auto r = grade("");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(path("out/scores.jsonl")));
  EXPECT_EQ(slurp(path("out/scores.jsonl")), "");
  EXPECT_FALSE(fs::exists(path("out/grade_summary.json")));
}

TEST_F(GradeTest, UnparseableTextScoresZeroAsAnswerAbsent) {
  const auto r = grade(json{{"id", tasks_[0].id}, {"text", "I cannot tell <answ"}}.dump() + "\n");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto row = json::parse(lines(slurp(path("out/scores.jsonl")))[0]);
  EXPECT_EQ(row["total"].get<double>(), 0.0);
  EXPECT_EQ(row["reason"], "answer absent");
  EXPECT_EQ(row["row"].get<int>(), 1);
}

TEST_F(GradeTest, SchemaErrorsReportLineNumbers) {
  const std::string ok = json{{"id", tasks_[0].id}, {"text", "<answer>A</answer>"}}.dump();
  auto r = grade(ok + "\n{\"id\": 1}\n");
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("responses.jsonl:2"), std::string::npos) << r.err;

  r = grade(ok + "\n" + ok + "\nnot json\n");
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("responses.jsonl:3"), std::string::npos) << r.err;

  r = grade(json{{"id", 99999}, {"text", "x"}}.dump() + "\n");
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find(":1"), std::string::npos) << r.err;
}

TEST_F(GradeTest, UsesConfiguredLadderAndLeavesInputsUntouched) {
  spit(path("ladder.json"), R"({"ladder": {"w_correct": 0.7}})");
  const auto& t = tasks_[0];
  const std::string responses =
      json{{"id", t.id}, {"text", "<answer>" + t.choices.correct_label().str() + "</answer>"}}
          .dump() +
      "\n";
  spit(path("responses.jsonl"), responses);
  const auto truth_before = slurp(path("t/tasks.json"));
  const auto r = run({"grade", "--config", path("ladder.json").string(), "--responses",
                      path("responses.jsonl").string(), "--ground-truth",
                      path("t/tasks.json").string(), "--out", out_dir()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_DOUBLE_EQ(json::parse(lines(slurp(path("out/scores.jsonl")))[0])["total"].get<double>(),
                   0.7);
  EXPECT_EQ(slurp(path("responses.jsonl")), responses);
  EXPECT_EQ(slurp(path("t/tasks.json")), truth_before);
}

TEST_F(GradeTest, MinimalGroundTruthWithReferenceReasoning) {
  spit(path("gt.json"), R"([{"id": "q1", "choices": ["dent", "scratch"], "correct_label": "B",
                             "reference_reasoning": "a long scratch so B"}])");
  spit(path("responses.jsonl"),
       R"({"id": "q1", "text": "<think>a long scratch so B</think><answer>B</answer>"})"
       "\n");
  const auto r = run({"grade", "--responses", path("responses.jsonl").string(), "--ground-truth",
                      path("gt.json").string(), "--out", out_dir()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto row = json::parse(lines(slurp(path("out/scores.jsonl")))[0]);
  EXPECT_EQ(row["total"].get<double>(), 1.0);
  EXPECT_EQ(row["reference_similarity"].get<double>(), 1.0);
}

// --- eval ---------------------------------------------------------------------------------

class EvalTest : public CliTest {
 protected:
  void SetUp() override {
    CliTest::SetUp();
    spit(path("cfg.json"), R"({"env": {"n": 210, "difficulty": 0.0}})");
    ASSERT_EQ(run({"gen-tasks", "--config", path("cfg.json").string(), "--out", out_dir("t")})
                  .code,
              kExitOk);
    Checkpoint ck;
    ck.shape = {8, 4, 4};
    ck.params = roam::testing::oracle_params(ck.shape);
    spit(path("oracle.json"), checkpoint_to_json(ck));
  }
  Result eval(const std::string& out, const std::string& ckpt = "oracle.json") {
    return run({"eval", "--checkpoint", path(ckpt).string(), "--tasks",
                path("t/tasks.json").string(), "--out", out_dir(out)});
  }
};

TEST_F(EvalTest, OracleCheckpointScoresOne) {
  const auto r = eval("e");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rep = json::parse(slurp(path("e/eval_report.json")));
  EXPECT_EQ(rep["macro_average"].get<double>(), 1.0);
  EXPECT_EQ(rep["discrimination_balanced"].get<double>(), 1.0);
  EXPECT_EQ(rep["consistency"]["rate"].get<double>(), 1.0);
  const auto csv = lines(slurp(path("e/eval_report.csv")));
  ASSERT_GE(csv.size(), 2u);
  EXPECT_EQ(csv[1], "overall,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000");
}

TEST_F(EvalTest, SameSeedSameReports) {
  Checkpoint ck;
  ck.shape = {8, 4, 4};
  Stream s(3);
  ck.params = roam::testing::random_vector(ck.shape.num_params(), s, 1.0);
  spit(path("random.json"), checkpoint_to_json(ck));
  ASSERT_EQ(eval("a", "random.json").code, kExitOk);
  ASSERT_EQ(eval("b", "random.json").code, kExitOk);
  EXPECT_EQ(slurp(path("a/eval_report.json")), slurp(path("b/eval_report.json")));
  EXPECT_EQ(slurp(path("a/eval_report.csv")), slurp(path("b/eval_report.csv")));
}

TEST_F(EvalTest, MissingCheckpointLeavesNoFiles) {
  const auto r = eval("e", "nope.json");
  EXPECT_NE(r.code, kExitOk);
  EXPECT_NE(r.err.find("nope.json"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("e/eval_report.json")));
  EXPECT_FALSE(fs::exists(path("e/eval_report.csv")));
}

TEST_F(EvalTest, DimensionMismatchIsReported) {
  Checkpoint ck;
  ck.shape = {6, 4, 4};
  ck.params.assign(ck.shape.num_params(), 0.0);
  spit(path("small.json"), checkpoint_to_json(ck));
  const auto r = eval("e", "small.json");
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("dimension mismatch"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("e/eval_report.json")));
}

TEST_F(EvalTest, CorruptCheckpointIsValidationError) {
  auto text = slurp(path("oracle.json"));
  text.replace(text.find("50.0"), 4, "49.0");
  spit(path("bad.json"), text);
  const auto r = eval("e", "bad.json");
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("checksum"), std::string::npos) << r.err;
}

TEST_F(EvalTest, TrainedCheckpointRoundTripsThroughEval) {
  ASSERT_EQ(run({"train", "--config", small_config(), "--out", out_dir("tr")}).code, kExitOk);
  spit(path("c.json"), R"({"env": {"n": 140, "heldout_n": 140}})");
  const auto r = run({"eval", "--config", path("c.json").string(), "--checkpoint",
                      path("tr/checkpoint.json").string(), "--out", out_dir("e")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto train_summary = json::parse(slurp(path("tr/summary.json")));
  const auto rep = json::parse(slurp(path("e/eval_report.json")));
  EXPECT_EQ(rep["macro_average"], train_summary["final"]["macro_average"]);
  EXPECT_EQ(rep["consistency"]["rate"], train_summary["final"]["consistency"]["rate"]);
}

}  // namespace
}  // namespace roam::cli
