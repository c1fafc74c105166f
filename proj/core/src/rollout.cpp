#include "segreward/rollout.hpp"

#include <algorithm>

#include "segreward/errors.hpp"

namespace segreward {

std::vector<RolloutSample> run_first_pass(Policy& policy, const Scene& scene,
                                          const std::string& query, int k, Rng& rng,
                                          PassCounter* counter) {
  if (k < 1) throw InvalidConfigError("run_first_pass: k must be >= 1");
  std::vector<RolloutSample> samples;
  samples.reserve(static_cast<std::size_t>(k));
  std::string prompt = render_prompt(kFirstPassPromptTemplate, query);
  for (int i = 0; i < k; ++i) {
    RolloutSample sample;
    if (counter) ++counter->first_passes;
    try {
      sample.first_gen = policy.generate(prompt, scene, DecodeMode::kSample, rng);
      ParseResult parsed = parse_response(sample.first_gen.text, PromptMode::kFirstPass);
      if (parsed.ok()) {
        sample.first = parsed.value();
      } else {
        sample.first_error = parsed.error();
      }
    } catch (const std::exception& e) {
      sample.policy_failure = e.what();
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

SecondPassResult run_second_pass(Policy& policy, const Scene& scene,
                                 const std::string& description, PassCounter* counter) {
  SecondPassResult result;
  if (description.empty()) return result;  // skipped; description reward stays 0
  result.attempted = true;
  if (counter) ++counter->second_passes;
  std::string prompt = render_prompt(kSecondPassPromptTemplate, description);
  Rng unused(0);  // greedy decode consumes no randomness
  try {
    result.gen = policy.generate(prompt, scene, DecodeMode::kGreedy, unused);
    ParseResult parsed = parse_response(result.gen->text, PromptMode::kSecondPass);
    if (parsed.ok()) {
      result.parsed = parsed.value();
    } else {
      result.error = parsed.error();
    }
  } catch (const std::exception&) {
    // Policy failure on the verifier pass: description reward stays 0.
    result.gen.reset();
    result.parsed.reset();
  }
  return result;
}

RolloutGroup assemble_group(const Scene& scene, const QueryCase& query,
                            std::vector<RolloutSample> samples, const RewardConfig& reward_cfg,
                            const GrpoConfig& grpo_cfg, const MaskOracle* oracle) {
  const bool mask_mode = reward_cfg.mode == RewardMode::kMask;
  if (mask_mode && oracle == nullptr)
    throw InvalidConfigError("assemble_group: mask reward mode requires a MaskOracle");

  RolloutGroup group;
  group.scene_seed = scene.seed;
  group.image_w = scene.image_w;
  group.image_h = scene.image_h;
  group.query = query.query;
  group.difficulty = query.difficulty;
  group.target_ids = query.target_ids;
  group.gt_answers = scene.answers_of(query.target_ids);
  if (mask_mode) group.gt_mask = scene.union_mask(query.target_ids);

  Tokenizer tokenizer;
  for (RolloutSample& sample : samples) {
    if (!sample.first) {
      sample.reward = total_reward(0.0, 0.0, AccuracyComponents{}, 0.0, 0.0, 1.0);
      sample.n1 = 0;
      sample.n2 = 0;
      continue;
    }
    const StructuredResponse& first = *sample.first;
    sample.n1 = static_cast<int>(tokenizer.count(first.think));

    double non_repeat = non_repeat_reward(first.think);
    AccuracyComponents acc;
    if (mask_mode) {
      std::string phrase = first.description.value_or("");
      sample.first_mask = sam3_adapter_mask(scene, first.answers, phrase, *oracle);
      acc.acc_iou = sam3_style_reward(*sample.first_mask, *group.gt_mask);
      acc.acc_total = acc.acc_iou;
    } else {
      acc = accuracy_reward(first.answers, group.gt_answers, reward_cfg);
    }

    double desc = 0.0;
    double len_raw = 0.0;
    if (sample.second) {
      sample.n2 = static_cast<int>(tokenizer.count(sample.second->think));
      len_raw = length_reward(sample.n1, sample.n2, reward_cfg.length);
      if (reward_cfg.enable_desc) {
        if (mask_mode) {
          std::string phrase = first.description.value_or("");
          sample.second_mask =
              sam3_adapter_mask(scene, sample.second->answers, phrase, *oracle);
          desc = sam3_style_reward(*sample.second_mask, *group.gt_mask);
        } else {
          desc = description_reward(sample.second->answers, group.gt_answers, reward_cfg);
        }
      }
    }
    sample.reward = total_reward(1.0, non_repeat, acc, desc, len_raw, 1.0);
  }

  std::vector<RewardBreakdown> breakdowns;
  breakdowns.reserve(samples.size());
  for (const RolloutSample& s : samples) breakdowns.push_back(s.reward);
  finalize_group_rewards(breakdowns, reward_cfg);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].reward = breakdowns[i];

  if (samples.size() >= 2) {
    std::vector<double> totals;
    totals.reserve(samples.size());
    for (const RolloutSample& s : samples) totals.push_back(s.reward.total);
    group.advantages = group_advantages(totals, grpo_cfg);
    for (std::size_t i = 0; i < samples.size(); ++i)
      samples[i].advantage = group.advantages.values[i];
  } else {
    group.advantages.values.assign(samples.size(), 0.0);
    group.advantages.normalized = grpo_cfg.normalize_by_std;
    group.advantages.epsilon = grpo_cfg.epsilon;
  }

  group.samples = std::move(samples);
  return group;
}

RolloutGroup run_two_stage_group(Policy& policy, const Scene& scene, const QueryCase& query,
                                 int k, Rng& rng, const RewardConfig& reward_cfg,
                                 const GrpoConfig& grpo_cfg, const MaskOracle* oracle,
                                 PassCounter* counter) {
  std::vector<RolloutSample> samples = run_first_pass(policy, scene, query.query, k, rng, counter);
  const bool needs_second = reward_cfg.enable_desc || reward_cfg.enable_len;
  if (needs_second) {
    for (RolloutSample& sample : samples) {
      if (!sample.first || !sample.first->description) continue;
      SecondPassResult second = run_second_pass(policy, scene, *sample.first->description,
                                                counter);
      sample.second_attempted = second.attempted;
      sample.second_gen = std::move(second.gen);
      sample.second = std::move(second.parsed);
      sample.second_error = std::move(second.error);
    }
  }
  return assemble_group(scene, query, std::move(samples), reward_cfg, grpo_cfg, oracle);
}

RolloutSample run_inference(Policy& policy, const Scene& scene, const std::string& query,
                            PassCounter* counter) {
  RolloutSample sample;
  if (counter) ++counter->first_passes;
  std::string prompt = render_prompt(kFirstPassPromptTemplate, query);
  Rng unused(0);
  sample.first_gen = policy.generate(prompt, scene, DecodeMode::kGreedy, unused);
  ParseResult parsed = parse_response(sample.first_gen.text, PromptMode::kFirstPass);
  if (parsed.ok()) {
    sample.first = parsed.value();
  } else {
    sample.first_error = parsed.error();
  }
  return sample;
}

double answer_entropy(const GenerationRecord& gen) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const TokenRecord& t : gen.tokens) {
    if (!t.answer_span) continue;
    sum += t.entropy;
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace segreward
