#include <benchmark/benchmark.h>

#include "segreward/matching.hpp"
#include "segreward/rewards.hpp"
#include "segreward/rng.hpp"
#include "segreward/scoring.hpp"
#include "segreward/structured.hpp"
#include "segreward/template_policy.hpp"
#include "segreward/train.hpp"

using namespace segreward;

namespace {

std::vector<ObjectAnswer> random_answers(Rng& rng, int count) {
  std::vector<ObjectAnswer> out;
  for (int i = 0; i < count; ++i) {
    double w = rng.uniform(10, 150), h = rng.uniform(10, 150);
    double x = rng.uniform(0, 400), y = rng.uniform(0, 400);
    out.push_back({x, y, x + w, y + h, x + w / 2, y + h / 2});
  }
  return out;
}

void ParseResponse(benchmark::State& state) {
  std::string text =
      "<think>I examine every object in the scene. Several candidates share similar "
      "traits.</think>\n<description>the red cup</description>\n<answer>"
      R"([{"bbox_2d": [10, 100, 200, 210], "point_2d": [30, 110]}, )"
      R"({"bbox_2d": [225, 296, 706, 786], "point_2d": [302, 410]}])"
      "</answer>";
  for (auto _ : state) {
    ParseResult r = parse_response(text, PromptMode::kFirstPass);
    benchmark::DoNotOptimize(r.ok());
  }
}
BENCHMARK(ParseResponse);

void MatchObjects(benchmark::State& state) {
  Rng rng(7);
  int n = static_cast<int>(state.range(0));
  std::vector<ObjectAnswer> gt = random_answers(rng, n);
  std::vector<ObjectAnswer> pred = random_answers(rng, n);
  for (auto _ : state) {
    Matching m = match_objects(gt, pred);
    benchmark::DoNotOptimize(m.total_iou);
  }
}
BENCHMARK(MatchObjects)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void ScoreSample(benchmark::State& state) {
  Rng rng(11);
  std::vector<ObjectAnswer> gt = random_answers(rng, 3);
  SampleTexts texts{
      "<think>One look. Two looks. Third look settles it.</think>"
      "<description>the red cup</description><answer>" +
          render_answers(gt) + "</answer>",
      "<think>Quick check.</think><answer>" + render_answers(gt) + "</answer>"};
  for (auto _ : state) {
    RewardBreakdown b = score_sample(texts, gt);
    benchmark::DoNotOptimize(b.total);
  }
}
BENCHMARK(ScoreSample);

void TrainStep(benchmark::State& state) {
  TrainConfig cfg;
  cfg.scene_pool = 8;
  cfg.grpo.batch_size = 4;
  std::vector<TrainCase> cases = build_cases(cfg);
  TemplatePolicy policy;
  Rng rng(3);
  for (auto _ : state) {
    std::vector<RolloutGroup> batch;
    for (int b = 0; b < cfg.grpo.batch_size; ++b)
      batch.push_back(run_two_stage_group(policy, cases[b].scene, cases[b].query,
                                          cfg.grpo.group_size, rng, cfg.reward, cfg.grpo));
    UpdateDiagnostics diag = policy_update(policy, batch, cfg.grpo);
    benchmark::DoNotOptimize(diag.objective);
  }
}
BENCHMARK(TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
