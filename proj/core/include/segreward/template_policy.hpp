#pragma once

#include <memory>
#include <string>
#include <vector>

#include "segreward/rollout.hpp"
#include "segreward/scene.hpp"

namespace segreward {

/// Reasoning-length buckets; template texts are calibrated to these exact
/// default-tokenizer counts so the length reward's decision boundary around
/// the anchor is exercisable.
inline constexpr int kThinkBucketTokens[4] = {15, 30, 60, 100};

enum class DescRole { kFaithful = 0, kImperfect = 1, kDistractor = 2, kNonexistent = 3 };
enum class AnswerRole { kDescribed = 0, kNear = 1, kWrong = 2, kEmpty = 3, kMalformed = 4 };

/// kFull instantiates the standard candidate set. kNegativeOnly replaces
/// every answer candidate with provably zero-credit payloads; it exists to
/// drive the conditional length gate's all-zero-accuracy regime.
enum class CandidateMode { kFull, kNegativeOnly };

struct TemplatePolicyConfig {
  CandidateMode candidate_mode = CandidateMode::kFull;
};

/// Description candidates instantiated for one (scene, question) pair,
/// indexed by DescRole.
std::vector<std::string> build_description_candidates(const Scene& scene,
                                                      const std::string& question);

/// Answer payload (the JSON text inside <answer>) for one answer role given
/// the chosen description.
std::string build_answer_payload(const Scene& scene, const std::string& question,
                                 const std::string& description, AnswerRole role,
                                 CandidateMode mode);

/// First-pass and second-pass think texts per length bucket.
const std::string& first_pass_think_text(int bucket);
const std::string& second_pass_think_text(int bucket);

/// Analytic policy over a factored discrete action space: first-pass think
/// bucket, description candidate, answer candidate, and second-pass think
/// bucket. Action probabilities are per-factor softmaxes; the log-prob of a
/// generation is the sum of its factor log-probs, and every factor entropy
/// has a closed form, so each GRPO quantity is exactly checkable.
class TemplatePolicy : public Policy {
 public:
  static constexpr int kThink1Factor = 0;
  static constexpr int kDescFactor = 1;
  static constexpr int kAnswerFactor = 2;
  static constexpr int kThink2Factor = 3;
  static constexpr int kNumFactors = 4;

  explicit TemplatePolicy(TemplatePolicyConfig config = {});

  GenerationRecord generate(const std::string& prompt, const Scene& scene, DecodeMode mode,
                            Rng& rng) override;
  std::shared_ptr<Policy> snapshot() const override;

  const TemplatePolicyConfig& config() const { return config_; }

  int action_count(int factor) const;
  const std::vector<double>& logits(int factor) const { return logits_[factor]; }
  std::vector<double>& logits(int factor) { return logits_[factor]; }
  std::vector<double> probabilities(int factor) const;
  double log_probability(int factor, int action) const;
  double factor_entropy(int factor) const;

  /// Sum over first-pass factors of the chosen actions' log-probs; the
  /// sequence log-prob the GRPO objective consumes.
  double action_logprob(const std::vector<int>& actions) const;

  /// Closed-form KL(this || reference) summed over all factors.
  double kl_to(const TemplatePolicy& reference) const;

  // Flat parameter view (factor logits concatenated), for updates and
  // finite-difference checks.
  int parameter_count() const;
  double parameter(int index) const;
  void set_parameter(int index, double value);
  void nudge_parameter(int index, double delta);
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& flat);

 private:
  TemplatePolicyConfig config_;
  std::vector<std::vector<double>> logits_;
};

}  // namespace segreward
