#include <doctest.h>

#include <cmath>

#include "segreward/rewards.hpp"
#include "segreward/rng.hpp"
#include "segreward/template_policy.hpp"
#include "segreward/train.hpp"

using namespace segreward;

namespace {

std::string first_prompt(const std::string& question) {
  return render_prompt(kFirstPassPromptTemplate, question);
}

}  // namespace

TEST_CASE("think templates hit the calibrated token counts") {
  Tokenizer t;
  for (int bucket = 0; bucket < 4; ++bucket) {
    CHECK(t.count(first_pass_think_text(bucket)) ==
          static_cast<std::size_t>(kThinkBucketTokens[bucket]));
    CHECK(t.count(second_pass_think_text(bucket)) ==
          static_cast<std::size_t>(kThinkBucketTokens[bucket]));
    // Sentences are distinct, so the non-repeat reward stays at 1.
    CHECK(non_repeat_reward(first_pass_think_text(bucket)) == doctest::Approx(1.0));
    CHECK(non_repeat_reward(second_pass_think_text(bucket)) == doctest::Approx(1.0));
  }
}

TEST_CASE("greedy decode is deterministic") {
  Scene scene = generate_scene(42, SceneConfig{});
  QueryCase query = generate_query(scene, Difficulty::kEasy, 1);
  TemplatePolicy policy;
  policy.logits(TemplatePolicy::kAnswerFactor) = {0.3, -0.1, 0.9, 0.0, -0.5};

  Rng rng(1);
  GenerationRecord a = policy.generate(first_prompt(query.query), scene, DecodeMode::kGreedy, rng);
  GenerationRecord b = policy.generate(first_prompt(query.query), scene, DecodeMode::kGreedy, rng);
  CHECK(a.text == b.text);
  CHECK(a.actions == b.actions);
  CHECK(a.actions[TemplatePolicy::kAnswerFactor] == 2);
}

TEST_CASE("sampled log-prob equals the sum of chosen factor log-probs") {
  Scene scene = generate_scene(42, SceneConfig{});
  QueryCase query = generate_query(scene, Difficulty::kEasy, 1);
  TemplatePolicy policy;
  Rng logit_rng(77);
  for (int p = 0; p < policy.parameter_count(); ++p)
    policy.set_parameter(p, logit_rng.uniform(-1.0, 1.0));

  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    GenerationRecord gen =
        policy.generate(first_prompt(query.query), scene, DecodeMode::kSample, rng);

    // Hand-computed softmax oracle.
    double expected = 0.0;
    for (int f : {TemplatePolicy::kThink1Factor, TemplatePolicy::kDescFactor,
                  TemplatePolicy::kAnswerFactor}) {
      const std::vector<double>& z = policy.logits(f);
      double mx = *std::max_element(z.begin(), z.end());
      double lse = 0.0;
      for (double v : z) lse += std::exp(v - mx);
      lse = mx + std::log(lse);
      expected += z[gen.actions[f]] - lse;
    }
    CHECK(gen.logprob() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(policy.action_logprob(gen.actions) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("uniform logits give ln(V) answer-token entropy") {
  Scene scene = generate_scene(42, SceneConfig{});
  QueryCase query = generate_query(scene, Difficulty::kEasy, 1);
  TemplatePolicy policy;  // zero logits everywhere
  Rng rng(3);
  GenerationRecord gen =
      policy.generate(first_prompt(query.query), scene, DecodeMode::kSample, rng);
  double expected = std::log(5.0);  // five answer candidates
  CHECK(answer_entropy(gen) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(policy.factor_entropy(TemplatePolicy::kAnswerFactor) ==
        doctest::Approx(expected).epsilon(1e-12));

  // Answer-span flags cover exactly the payload tokens.
  bool saw_answer = false;
  for (const TokenRecord& tok : gen.tokens) {
    if (tok.answer_span) saw_answer = true;
    CHECK(tok.entropy >= 0.0);
    CHECK(tok.logprob <= 0.0);
  }
  CHECK(saw_answer);
}

TEST_CASE("description candidates ground as their roles require") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5, 10, 20, 30}) {
    Scene scene = generate_scene(seed, SceneConfig{});
    QueryCase query = generate_query(scene, Difficulty::kEasy, seed);
    std::vector<std::string> descs = build_description_candidates(scene, query.query);
    REQUIRE(descs.size() == 4);

    std::vector<int> faithful =
        resolve_phrase(scene, descs[static_cast<int>(DescRole::kFaithful)]);
    std::vector<int> want = query.target_ids;
    std::sort(faithful.begin(), faithful.end());
    std::sort(want.begin(), want.end());
    CHECK(faithful == want);

    std::vector<int> distractor =
        resolve_phrase(scene, descs[static_cast<int>(DescRole::kDistractor)]);
    for (int id : distractor)
      CHECK(std::find(want.begin(), want.end(), id) == want.end());

    CHECK(resolve_phrase(scene, descs[static_cast<int>(DescRole::kNonexistent)]).empty());
  }
}

TEST_CASE("negative-only candidates provably earn zero accuracy") {
  RewardConfig reward_cfg;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Scene scene = generate_scene(seed, SceneConfig{});
    QueryCase query = generate_query(scene, Difficulty::kEasy, seed);
    std::vector<ObjectAnswer> gt = scene.answers_of(query.target_ids);
    std::vector<std::string> descs = build_description_candidates(scene, query.query);
    for (int role = 0; role < 5; ++role) {
      std::string payload =
          build_answer_payload(scene, query.query, descs[0], static_cast<AnswerRole>(role),
                               CandidateMode::kNegativeOnly);
      std::string text = "<think>t</think><description>d</description><answer>" + payload +
                         "</answer>";
      ParseResult parsed = parse_response(text, PromptMode::kFirstPass);
      if (!parsed.ok()) continue;  // the malformed slot
      AccuracyComponents acc = accuracy_reward(parsed.value().answers, gt, reward_cfg);
      CHECK(acc.acc_total == 0.0);
    }
  }
}

TEST_CASE("policy_update: zero advantages leave parameters unchanged") {
  Scene scene = generate_scene(42, SceneConfig{});
  QueryCase query = generate_query(scene, Difficulty::kEasy, 1);
  TemplatePolicy policy;
  Rng rng(9);
  GrpoConfig cfg;
  RolloutGroup group =
      run_two_stage_group(policy, scene, query, 4, rng, RewardConfig{}, cfg, nullptr);
  for (RolloutSample& s : group.samples) s.advantage = 0.0;

  std::vector<double> before = policy.parameters();
  policy_update(policy, {group}, cfg, nullptr);
  CHECK(policy.parameters() == before);
}

TEST_CASE("policy_update: score-function sign on a two-sample group") {
  Scene scene = generate_scene(42, SceneConfig{});
  QueryCase query = generate_query(scene, Difficulty::kEasy, 1);
  TemplatePolicy policy;
  GrpoConfig cfg;

  // Hand-build a group: sample 0 chose answer action 0, sample 1 chose 1.
  RolloutGroup group;
  RolloutSample s0, s1;
  s0.first_gen.actions = {0, 0, 0, -1};
  s0.advantage = 1.0;
  s1.first_gen.actions = {0, 0, 1, -1};
  s1.advantage = -1.0;
  group.samples = {s0, s1};

  std::vector<double> before = policy.logits(TemplatePolicy::kAnswerFactor);
  policy_update(policy, {group}, cfg, nullptr);
  const std::vector<double>& after = policy.logits(TemplatePolicy::kAnswerFactor);
  CHECK(after[0] > before[0]);
  CHECK(after[1] < before[1]);
}

TEST_CASE("analytic gradient matches finite differences") {
  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    Scene scene = generate_scene(rng.next_u64(), SceneConfig{});
    QueryCase query = generate_query(scene, Difficulty::kEasy, rng.next_u64());
    TemplatePolicy policy;
    for (int p = 0; p < policy.parameter_count(); ++p)
      policy.set_parameter(p, rng.uniform(-1.0, 1.0));
    TemplatePolicy reference;
    for (int p = 0; p < reference.parameter_count(); ++p)
      reference.set_parameter(p, rng.uniform(-1.0, 1.0));

    GrpoConfig cfg;
    cfg.kl_beta = (trial % 2 == 0) ? 0.0 : 0.25;
    std::vector<RolloutGroup> batch = {
        run_two_stage_group(policy, scene, query, 4, rng, RewardConfig{}, cfg, nullptr)};

    std::vector<double> grad = grpo_batch_gradient(policy, batch, cfg, &reference);
    const double h = 1e-5;
    for (int p = 0; p < policy.parameter_count(); ++p) {
      TemplatePolicy plus = policy, minus = policy;
      plus.nudge_parameter(p, h);
      minus.nudge_parameter(p, -h);
      double fd = (grpo_batch_objective(plus, batch, cfg, &reference) -
                   grpo_batch_objective(minus, batch, cfg, &reference)) /
                  (2 * h);
      double rel = std::abs(grad[p] - fd) / std::max({std::abs(grad[p]), std::abs(fd), 1e-2});
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("closed-form KL") {
  TemplatePolicy a, b;
  CHECK(a.kl_to(b) == doctest::Approx(0.0));

  a.logits(0) = {1.0, 0.0, 0.0, 0.0};
  double manual = 0.0;
  {
    std::vector<double> p = a.probabilities(0);
    std::vector<double> q = b.probabilities(0);
    for (int i = 0; i < 4; ++i) manual += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  CHECK(a.kl_to(b) == doctest::Approx(manual).epsilon(1e-12));
  CHECK(a.kl_to(b) >= 0.0);
  CHECK(a.kl_to(a) == doctest::Approx(0.0));
}

TEST_CASE("snapshot is an independent frozen copy") {
  TemplatePolicy policy;
  std::shared_ptr<Policy> snap = policy.snapshot();
  policy.logits(0)[0] = 5.0;
  auto* frozen = dynamic_cast<TemplatePolicy*>(snap.get());
  REQUIRE(frozen != nullptr);
  CHECK(frozen->logits(0)[0] == 0.0);
}

TEST_CASE("non-finite gradient is rejected") {
  TemplatePolicy policy;
  GrpoConfig cfg;
  RolloutGroup group;
  RolloutSample s;
  s.first_gen.actions = {0, 0, 0, -1};
  s.advantage = std::numeric_limits<double>::infinity();
  group.samples = {s, s};
  CHECK_THROWS_AS(policy_update(policy, {group}, cfg, nullptr), NonFiniteGradientError);
}
