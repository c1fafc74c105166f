#include <doctest.h>

#include <sstream>

#include "segreward/scoring.hpp"
#include "segreward/template_policy.hpp"
#include "segreward/train.hpp"

using namespace segreward;

namespace {

std::string perfect_record() {
  // First pass: 6 think tokens, exact answer; second pass: 3 think tokens.
  return R"({"raw_first_pass":"<think>One. Two. Three.</think><description>the cup</description><answer>[{\"bbox_2d\": [0, 0, 100, 100], \"point_2d\": [50, 50]}]</answer>","raw_second_pass":"<think>Quick look.</think><answer>[{\"bbox_2d\": [0, 0, 100, 100], \"point_2d\": [50, 50]}]</answer>","gt_answers":[{"bbox_2d":[0,0,100,100],"point_2d":[50,50]}],"image_w":640,"image_h":480})";
}

}  // namespace

TEST_CASE("flat record scoring: one perfect record totals 8") {
  std::istringstream in(perfect_record());
  std::vector<ScoreGroup> groups;
  std::string error;
  REQUIRE(read_score_stream(in, groups, error));
  REQUIRE(groups.size() == 1);
  REQUIRE(groups[0].samples.size() == 1);

  ScoredGroup scored = score_group(groups[0], RewardConfig{}, GrpoConfig{});
  REQUIRE(scored.breakdowns.size() == 1);
  const RewardBreakdown& b = scored.breakdowns[0];
  CHECK(b.format == 1.0);
  CHECK(b.non_repeat == doctest::Approx(1.0));
  CHECK(b.acc_total == doctest::Approx(3.0));
  CHECK(b.desc == doctest::Approx(3.0));
  CHECK(b.len_conditional == doctest::Approx(1.0));
  CHECK(b.total == doctest::Approx(8.0));
  CHECK(scored.advantages.empty());  // singleton group
}

TEST_CASE("empty stream scores zero records") {
  std::istringstream in("");
  std::vector<ScoreGroup> groups;
  std::string error;
  REQUIRE(read_score_stream(in, groups, error));
  CHECK(groups.empty());
  ScoreSummary s = summarize_scores({});
  CHECK(s.samples == 0);
}

TEST_CASE("schema violations carry line numbers") {
  SUBCASE("invalid json") {
    std::istringstream in(perfect_record() + "\nnot json\n");
    std::vector<ScoreGroup> groups;
    std::string error;
    CHECK(!read_score_stream(in, groups, error));
    CHECK(error.find("line 2") == 0);
  }
  SUBCASE("missing field") {
    std::istringstream in(R"({"raw_first_pass":"x"})");
    std::vector<ScoreGroup> groups;
    std::string error;
    CHECK(!read_score_stream(in, groups, error));
    CHECK(error.find("line 1") == 0);
    CHECK(error.find("gt_answers") != std::string::npos);
  }
}

TEST_CASE("malformed first pass fails closed in scoring") {
  std::string record =
      R"({"raw_first_pass":"<think>broken","gt_answers":[{"bbox_2d":[0,0,10,10],"point_2d":[5,5]}],"image_w":100,"image_h":100})";
  std::istringstream in(record);
  std::vector<ScoreGroup> groups;
  std::string error;
  REQUIRE(read_score_stream(in, groups, error));
  ScoredGroup scored = score_group(groups[0], RewardConfig{}, GrpoConfig{});
  CHECK(scored.breakdowns[0].total == 0.0);
  CHECK(scored.breakdowns[0].format == 0.0);
}

TEST_CASE("flat records with a shared group key gate together") {
  // Two samples, both zero accuracy, long first pass: the gate must force
  // len_conditional to 1 for the whole group.
  std::string think;
  for (int i = 0; i < 60; ++i) think += "w" + std::to_string(i) + " ";
  std::string base =
      R"("gt_answers":[{"bbox_2d":[0,0,100,100],"point_2d":[50,50]}],"image_w":640,"image_h":480,"group":"g1")";
  auto record = [&](const std::string& payload) {
    return "{\"raw_first_pass\":\"<think>" + think +
           "</think><description>d</description><answer>" + payload +
           "</answer>\",\"raw_second_pass\":\"<think>short.</think><answer>[]</answer>\"," +
           base + "}";
  };
  std::istringstream in(record("[]") + "\n" + record("[]") + "\n");
  std::vector<ScoreGroup> groups;
  std::string error;
  REQUIRE(read_score_stream(in, groups, error));
  REQUIRE(groups.size() == 1);
  REQUIRE(groups[0].samples.size() == 2);

  ScoredGroup scored = score_group(groups[0], RewardConfig{}, GrpoConfig{});
  for (const RewardBreakdown& b : scored.breakdowns) {
    CHECK(b.acc_total == 0.0);
    CHECK(b.len_conditional == 1.0);
  }
  REQUIRE(scored.advantages.size() == 2);
  CHECK(std::abs(scored.advantages[0] + scored.advantages[1]) <= 1e-9);
}

TEST_CASE("trace replay reproduces in-run rewards exactly") {
  TrainConfig cfg;
  cfg.steps = 3;
  cfg.scene_pool = 4;
  cfg.grpo.batch_size = 2;
  cfg.grpo.group_size = 4;

  std::vector<std::string> lines;
  std::vector<std::vector<RewardBreakdown>> recorded;
  train(cfg, [&](int step, const RolloutGroup& group) {
    lines.push_back(group_to_trace_line(step, group));
    std::vector<RewardBreakdown> rewards;
    for (const RolloutSample& s : group.samples) rewards.push_back(s.reward);
    recorded.push_back(std::move(rewards));
  });
  REQUIRE(!lines.empty());

  std::string stream;
  for (const std::string& line : lines) stream += line + "\n";
  std::istringstream in(stream);
  std::vector<ScoreGroup> groups;
  std::string error;
  REQUIRE(read_score_stream(in, groups, error));
  REQUIRE(groups.size() == recorded.size());

  for (std::size_t g = 0; g < groups.size(); ++g) {
    ScoredGroup scored = score_group(groups[g], cfg.reward, cfg.grpo);
    REQUIRE(scored.breakdowns.size() == recorded[g].size());
    for (std::size_t i = 0; i < scored.breakdowns.size(); ++i)
      CHECK(scored.breakdowns[i] == recorded[g][i]);
  }
}

TEST_CASE("mask-mode trace replay reproduces in-run rewards") {
  TrainConfig cfg;
  cfg.steps = 2;
  cfg.scene_pool = 4;
  cfg.grpo.batch_size = 2;
  cfg.grpo.group_size = 4;
  cfg.reward.mode = RewardMode::kMask;

  std::vector<std::string> lines;
  std::vector<std::vector<RewardBreakdown>> recorded;
  train(cfg, [&](int step, const RolloutGroup& group) {
    lines.push_back(group_to_trace_line(step, group));
    std::vector<RewardBreakdown> rewards;
    for (const RolloutSample& s : group.samples) rewards.push_back(s.reward);
    recorded.push_back(std::move(rewards));
  });

  std::string stream;
  for (const std::string& line : lines) stream += line + "\n";
  std::istringstream in(stream);
  std::vector<ScoreGroup> groups;
  std::string error;
  REQUIRE(read_score_stream(in, groups, error));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    ScoredGroup scored = score_group(groups[g], cfg.reward, cfg.grpo);
    for (std::size_t i = 0; i < scored.breakdowns.size(); ++i)
      CHECK(scored.breakdowns[i] == recorded[g][i]);
  }
}
