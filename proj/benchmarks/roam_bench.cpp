// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "roam/grpo.hpp"
#include "roam/response_parser.hpp"
#include "roam/reward.hpp"
#include "roam/rng.hpp"
#include "roam/toy_env.hpp"

namespace {

using namespace roam;

const PolicyShape kShape{8, 4, 4};

std::vector<Task> bench_tasks() { return generate_tasks({.seed = 1, .n = 700}); }

void BM_ParseTaggedResponse(benchmark::State& state) {
  const std::string text =
      "<think>The surface shows a long scratch near the rim, so the answer is B</think>"
      "<answer>B</answer>";
  for (auto _ : state) benchmark::DoNotOptimize(parse_tagged_response(text));
}
BENCHMARK(BM_ParseTaggedResponse);

void BM_RoamScore(benchmark::State& state) {
  const auto tasks = bench_tasks();
  const auto& t = tasks.front();
  const auto key = t.choices.correct_label();
  const auto parsed = parse_tagged_response(render_tagged_response(claim_text(t, key.index()), key));
  for (auto _ : state) benchmark::DoNotOptimize(roam_score(parsed, t.ground_truth(), t.choices));
}
BENCHMARK(BM_RoamScore);

void BM_PolicySample(benchmark::State& state) {
  const auto tasks = bench_tasks();
  const FactoredSoftmaxPolicy policy(kShape);
  Stream init(2);
  const auto params = FactoredPolicyParams::random(kShape, init, 0.5).flat;
  Stream s(3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy.sample(tasks[i++ % tasks.size()], params, s));
  }
}
BENCHMARK(BM_PolicySample);

void BM_GrpoGradient(benchmark::State& state) {
  const auto tasks = bench_tasks();
  const FactoredSoftmaxPolicy policy(kShape);
  Stream init(4);
  const auto ref = FactoredPolicyParams::random(kShape, init, 0.5).flat;
  GrpoConfig cfg;
  const auto batch = collect_rollouts(cfg, 0, tasks, policy, ref, ref,
                                      make_reward_function(RewardMode::Roam));
  for (auto _ : state) benchmark::DoNotOptimize(grpo_gradient(batch, policy, ref, ref, cfg));
}
BENCHMARK(BM_GrpoGradient);

void BM_TrainSteps(benchmark::State& state) {
  const auto tasks = bench_tasks();
  const FactoredSoftmaxPolicy policy(kShape);
  GrpoConfig cfg;
  cfg.total_steps = static_cast<std::size_t>(state.range(0));
  const auto reward = make_reward_function(RewardMode::Roam);
  for (auto _ : state) {
    auto params = FactoredPolicyParams::zeros(kShape).flat;
    benchmark::DoNotOptimize(train_loop(cfg, tasks, policy, params, reward));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainSteps)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
