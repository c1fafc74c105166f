#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "segreward/grpo.hpp"
#include "segreward/mask_oracle.hpp"
#include "segreward/rewards.hpp"
#include "segreward/rng.hpp"
#include "segreward/scene.hpp"
#include "segreward/structured.hpp"

namespace segreward {

struct TokenRecord {
  std::string token;
  double logprob = 0.0;  // <= 0; a factor's log-prob sits on its first token
  double entropy = 0.0;  // >= 0; the factor's distribution entropy, per token
  bool answer_span = false;
};

enum class DecodeMode { kSample, kGreedy };

struct GenerationRecord {
  std::string text;
  std::vector<TokenRecord> tokens;
  std::vector<int> actions;  // chosen action per policy factor; empty if opaque

  double logprob() const {
    double sum = 0.0;
    for (const TokenRecord& t : tokens) sum += t.logprob;
    return sum;
  }
};

/// Generation interface the engine trains against. Greedy decode must be
/// deterministic for fixed parameters.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual GenerationRecord generate(const std::string& prompt, const Scene& scene,
                                    DecodeMode mode, Rng& rng) = 0;
  /// Frozen copy usable as a KL reference.
  virtual std::shared_ptr<Policy> snapshot() const = 0;
};

/// Counts generation passes; inference must drive exactly one first pass and
/// no second pass per query.
struct PassCounter {
  long first_passes = 0;
  long second_passes = 0;
};

struct RolloutSample {
  GenerationRecord first_gen;
  std::optional<StructuredResponse> first;
  std::optional<ParseError> first_error;
  std::optional<std::string> policy_failure;  // generator threw; sample scores 0

  bool second_attempted = false;
  std::optional<GenerationRecord> second_gen;
  std::optional<StructuredResponse> second;
  std::optional<ParseError> second_error;

  std::optional<BinaryMask> first_mask;   // mask reward mode only
  std::optional<BinaryMask> second_mask;  // mask reward mode only

  int n1 = 0;
  int n2 = 0;
  RewardBreakdown reward;
  double advantage = 0.0;
};

struct RolloutGroup {
  std::uint64_t scene_seed = 0;
  int image_w = 0;
  int image_h = 0;
  std::string query;
  Difficulty difficulty = Difficulty::kEasy;
  std::vector<int> target_ids;
  std::vector<ObjectAnswer> gt_answers;
  std::optional<BinaryMask> gt_mask;  // mask reward mode only
  std::vector<RolloutSample> samples;
  GroupAdvantages advantages;
};

/// K independent sampled first-pass generations; parse failures are retained
/// per sample, and a throwing policy is recorded as a failure rather than
/// aborting the group.
std::vector<RolloutSample> run_first_pass(Policy& policy, const Scene& scene,
                                          const std::string& query, int k, Rng& rng,
                                          PassCounter* counter = nullptr);

struct SecondPassResult {
  bool attempted = false;
  std::optional<GenerationRecord> gen;
  std::optional<StructuredResponse> parsed;
  std::optional<ParseError> error;
};

/// Greedy second pass with the description substituted into the question
/// slot. An empty description skips the pass (description reward 0).
SecondPassResult run_second_pass(Policy& policy, const Scene& scene,
                                 const std::string& description,
                                 PassCounter* counter = nullptr);

/// Computes every per-sample reward, applies the group-level conditional
/// length gate, and fills advantages over the total rewards. Mask reward
/// mode requires an oracle.
RolloutGroup assemble_group(const Scene& scene, const QueryCase& query,
                            std::vector<RolloutSample> samples, const RewardConfig& reward_cfg,
                            const GrpoConfig& grpo_cfg, const MaskOracle* oracle = nullptr);

/// First pass (sampled, K times) -> second passes -> assembled group. The
/// second pass runs only when the description or length rewards need it.
RolloutGroup run_two_stage_group(Policy& policy, const Scene& scene, const QueryCase& query,
                                 int k, Rng& rng, const RewardConfig& reward_cfg,
                                 const GrpoConfig& grpo_cfg, const MaskOracle* oracle = nullptr,
                                 PassCounter* counter = nullptr);

/// Evaluation path: exactly one greedy first pass, no second pass.
RolloutSample run_inference(Policy& policy, const Scene& scene, const std::string& query,
                            PassCounter* counter = nullptr);

/// Mean per-token distribution entropy over answer-span tokens; 0 when the
/// generation has no answer tokens.
double answer_entropy(const GenerationRecord& gen);

}  // namespace segreward
