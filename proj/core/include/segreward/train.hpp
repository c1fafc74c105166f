#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "segreward/grpo.hpp"
#include "segreward/rewards.hpp"
#include "segreward/rollout.hpp"
#include "segreward/scene.hpp"
#include "segreward/template_policy.hpp"

namespace segreward {

struct TrainConfig {
  std::uint64_t seed = 1;
  int steps = 200;
  GrpoConfig grpo;
  RewardConfig reward;
  SceneConfig scene;
  int scene_pool = 32;
  double hard_fraction = 0.5;
  double oracle_noise = 0.0;
  CandidateMode candidate_mode = CandidateMode::kFull;
};

/// One timeline row: batch-level means for the policy as of this step.
struct StepMetrics {
  int step = 0;
  double mean_total = 0.0;
  double mean_acc = 0.0;
  double mean_desc = 0.0;
  double mean_len = 0.0;
  double mean_n1 = 0.0;  // over samples whose first pass parsed
  double mean_n2 = 0.0;  // over samples whose second pass parsed
  double answer_entropy = 0.0;
  double acc_rate = 0.0;     // fraction of samples with acc_total > 0
  double format_rate = 0.0;  // fraction of samples that parsed
  double mean_non_repeat = 0.0;
  double gate_open_fraction = 0.0;  // groups where the length gate passed through
  double objective = 0.0;           // surrogate value at sampling time
  double kl_to_reference = 0.0;
};

struct TrainResult {
  /// Evaluation batch under the untrained policy (step 0, no update).
  StepMetrics initial;
  /// One row per training step s = 1..steps, measured on the batch that
  /// drove update s; empty for a 0-step run.
  std::vector<StepMetrics> timeline;
  TemplatePolicy policy;  // parameters after the final update
};

/// GRPO surrogate over a batch of assembled groups, with advantages frozen:
/// (1/B) sum_groups (1/K) sum_i A_i * logpi(y_i) - beta * KL(policy || reference).
double grpo_batch_objective(const TemplatePolicy& policy,
                            const std::vector<RolloutGroup>& batch, const GrpoConfig& cfg,
                            const TemplatePolicy* reference = nullptr);

/// Analytic gradient of grpo_batch_objective w.r.t. the flat logit vector.
std::vector<double> grpo_batch_gradient(const TemplatePolicy& policy,
                                        const std::vector<RolloutGroup>& batch,
                                        const GrpoConfig& cfg,
                                        const TemplatePolicy* reference = nullptr);

struct UpdateDiagnostics {
  double objective = 0.0;
  double kl_to_reference = 0.0;
  double grad_norm = 0.0;
  double mean_total = 0.0;
  double mean_n1 = 0.0;
  double mean_answer_entropy = 0.0;
};

/// One ascent step on the logits. Throws NonFiniteGradientError if the
/// gradient is not finite.
UpdateDiagnostics policy_update(TemplatePolicy& policy, const std::vector<RolloutGroup>& batch,
                                const GrpoConfig& cfg,
                                const TemplatePolicy* reference = nullptr);

using TraceSink = std::function<void(int step, const RolloutGroup& group)>;

/// Seeded end-to-end loop: sample groups -> rewards -> advantages -> update.
/// Emits one metrics row per step plus a final evaluation row; identical
/// config and seed reproduce the timeline bit for bit.
TrainResult train(const TrainConfig& config, const TraceSink& trace_sink = nullptr);

/// The fixed (scene, query) cases a config trains over.
struct TrainCase {
  Scene scene;
  QueryCase query;
};
std::vector<TrainCase> build_cases(const TrainConfig& config);

/// Pinned CSV schema:
/// step,mean_total,mean_acc,mean_desc,mean_len,mean_n1,mean_n2,answer_entropy
std::string metrics_csv(const std::vector<StepMetrics>& timeline);

}  // namespace segreward
