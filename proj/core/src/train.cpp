#include "segreward/train.hpp"

#include <cmath>
#include <cstdio>

#include "segreward/errors.hpp"
#include "segreward/rng.hpp"

namespace segreward {

namespace {

// d/dz_j of log softmax(z)[a] is 1[j=a] - p_j; d/dz_j of KL(p||q) is
// p_j * (log p_j - log q_j - KL).
void accumulate_sample_gradient(const TemplatePolicy& policy, const std::vector<int>& actions,
                                double weight, std::vector<double>& grad) {
  int offset = 0;
  for (int f = 0; f < TemplatePolicy::kNumFactors; ++f) {
    int n = policy.action_count(f);
    int action = f < static_cast<int>(actions.size()) ? actions[f] : -1;
    if (action >= 0) {
      std::vector<double> p = policy.probabilities(f);
      for (int j = 0; j < n; ++j) {
        double indicator = (j == action) ? 1.0 : 0.0;
        grad[offset + j] += weight * (indicator - p[j]);
      }
    }
    offset += n;
  }
}

void accumulate_kl_gradient(const TemplatePolicy& policy, const TemplatePolicy& reference,
                            double beta, std::vector<double>& grad) {
  int offset = 0;
  for (int f = 0; f < TemplatePolicy::kNumFactors; ++f) {
    int n = policy.action_count(f);
    std::vector<double> p = policy.probabilities(f);
    double kl_f = 0.0;
    for (int a = 0; a < n; ++a)
      if (p[a] > 0.0)
        kl_f += p[a] * (policy.log_probability(f, a) - reference.log_probability(f, a));
    for (int j = 0; j < n; ++j) {
      double diff = policy.log_probability(f, j) - reference.log_probability(f, j);
      grad[offset + j] -= beta * p[j] * (diff - kl_f);
    }
    offset += n;
  }
}

}  // namespace

double grpo_batch_objective(const TemplatePolicy& policy,
                            const std::vector<RolloutGroup>& batch, const GrpoConfig& cfg,
                            const TemplatePolicy* reference) {
  if (batch.empty()) return 0.0;
  double sum = 0.0;
  for (const RolloutGroup& group : batch) {
    if (group.samples.empty()) continue;
    double group_sum = 0.0;
    for (const RolloutSample& s : group.samples)
      group_sum += s.advantage * policy.action_logprob(s.first_gen.actions);
    sum += group_sum / static_cast<double>(group.samples.size());
  }
  double objective = sum / static_cast<double>(batch.size());
  if (reference != nullptr && cfg.kl_beta != 0.0)
    objective -= cfg.kl_beta * policy.kl_to(*reference);
  return objective;
}

std::vector<double> grpo_batch_gradient(const TemplatePolicy& policy,
                                        const std::vector<RolloutGroup>& batch,
                                        const GrpoConfig& cfg,
                                        const TemplatePolicy* reference) {
  std::vector<double> grad(policy.parameter_count(), 0.0);
  if (batch.empty()) return grad;
  for (const RolloutGroup& group : batch) {
    if (group.samples.empty()) continue;
    double scale = 1.0 / (static_cast<double>(batch.size()) *
                          static_cast<double>(group.samples.size()));
    for (const RolloutSample& s : group.samples)
      accumulate_sample_gradient(policy, s.first_gen.actions, s.advantage * scale, grad);
  }
  if (reference != nullptr && cfg.kl_beta != 0.0)
    accumulate_kl_gradient(policy, *reference, cfg.kl_beta, grad);
  return grad;
}

UpdateDiagnostics policy_update(TemplatePolicy& policy, const std::vector<RolloutGroup>& batch,
                                const GrpoConfig& cfg, const TemplatePolicy* reference) {
  UpdateDiagnostics diag;
  diag.objective = grpo_batch_objective(policy, batch, cfg, reference);
  if (reference != nullptr) diag.kl_to_reference = policy.kl_to(*reference);

  std::vector<double> grad = grpo_batch_gradient(policy, batch, cfg, reference);
  double norm2 = 0.0;
  for (double g : grad) {
    if (!std::isfinite(g)) throw NonFiniteGradientError("policy_update: non-finite gradient");
    norm2 += g * g;
  }
  diag.grad_norm = std::sqrt(norm2);

  std::vector<double> params = policy.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    params[i] += cfg.learning_rate * grad[i];
  policy.set_parameters(params);

  double total = 0.0, n1 = 0.0, entropy = 0.0;
  std::size_t samples = 0, parsed = 0;
  for (const RolloutGroup& group : batch) {
    for (const RolloutSample& s : group.samples) {
      total += s.reward.total;
      entropy += answer_entropy(s.first_gen);
      if (s.first) {
        n1 += s.n1;
        ++parsed;
      }
      ++samples;
    }
  }
  if (samples > 0) {
    diag.mean_total = total / static_cast<double>(samples);
    diag.mean_answer_entropy = entropy / static_cast<double>(samples);
  }
  if (parsed > 0) diag.mean_n1 = n1 / static_cast<double>(parsed);
  return diag;
}

std::vector<TrainCase> build_cases(const TrainConfig& config) {
  if (config.scene_pool < 1) throw InvalidConfigError("train: scene_pool must be >= 1");
  std::vector<TrainCase> cases;
  cases.reserve(static_cast<std::size_t>(config.scene_pool));
  Rng difficulty_rng(mix_seed(config.seed, 0xD1FF));
  for (int i = 0; i < config.scene_pool; ++i) {
    TrainCase c;
    std::uint64_t scene_seed = mix_seed(config.seed, 0x5C000 + static_cast<std::uint64_t>(i));
    c.scene = generate_scene(scene_seed, config.scene);
    bool want_hard = difficulty_rng.bernoulli(config.hard_fraction);
    std::uint64_t query_seed = mix_seed(config.seed, 0x9A000 + static_cast<std::uint64_t>(i));
    if (want_hard) {
      try {
        c.query = generate_query(c.scene, Difficulty::kHard, query_seed);
      } catch (const UnresolvableError&) {
        c.query = generate_query(c.scene, Difficulty::kEasy, query_seed);
      }
    } else {
      c.query = generate_query(c.scene, Difficulty::kEasy, query_seed);
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

namespace {

StepMetrics summarize_batch(int step, const std::vector<RolloutGroup>& batch) {
  StepMetrics m;
  m.step = step;
  std::size_t samples = 0, parsed_first = 0, parsed_second = 0, credited = 0;
  std::size_t gate_open_groups = 0;
  for (const RolloutGroup& group : batch) {
    bool any_credit = false;
    for (const RolloutSample& s : group.samples) {
      ++samples;
      m.mean_total += s.reward.total;
      m.mean_acc += s.reward.acc_total;
      m.mean_desc += s.reward.desc;
      m.mean_len += s.reward.len_conditional;
      m.mean_non_repeat += s.reward.non_repeat;
      m.answer_entropy += answer_entropy(s.first_gen);
      if (s.reward.acc_total > 0.0) {
        ++credited;
        any_credit = true;
      }
      if (s.first) {
        m.format_rate += 1.0;
        m.mean_n1 += s.n1;
        ++parsed_first;
      }
      if (s.second) {
        m.mean_n2 += s.n2;
        ++parsed_second;
      }
    }
    if (any_credit) ++gate_open_groups;
  }
  if (samples > 0) {
    double ns = static_cast<double>(samples);
    m.mean_total /= ns;
    m.mean_acc /= ns;
    m.mean_desc /= ns;
    m.mean_len /= ns;
    m.mean_non_repeat /= ns;
    m.answer_entropy /= ns;
    m.format_rate /= ns;
    m.acc_rate = static_cast<double>(credited) / ns;
  }
  if (parsed_first > 0) m.mean_n1 /= static_cast<double>(parsed_first);
  if (parsed_second > 0) m.mean_n2 /= static_cast<double>(parsed_second);
  if (!batch.empty())
    m.gate_open_fraction =
        static_cast<double>(gate_open_groups) / static_cast<double>(batch.size());
  return m;
}

}  // namespace

TrainResult train(const TrainConfig& config, const TraceSink& trace_sink) {
  if (config.steps < 0) throw InvalidConfigError("train: steps must be >= 0");
  if (config.grpo.group_size < 2) throw InvalidConfigError("train: group_size must be >= 2");
  if (config.grpo.batch_size < 1) throw InvalidConfigError("train: batch_size must be >= 1");

  std::vector<TrainCase> cases = build_cases(config);
  MaskOracle oracle(config.oracle_noise);
  const MaskOracle* oracle_ptr =
      config.reward.mode == RewardMode::kMask ? &oracle : nullptr;

  TemplatePolicyConfig policy_cfg;
  policy_cfg.candidate_mode = config.candidate_mode;
  TrainResult result{.timeline = {}, .policy = TemplatePolicy(policy_cfg)};
  std::shared_ptr<Policy> reference_handle = result.policy.snapshot();
  const auto* reference = static_cast<const TemplatePolicy*>(reference_handle.get());

  Rng rollout_rng(mix_seed(config.seed, 0x7011));
  long case_cursor = 0;

  auto sample_batch = [&]() {
    std::vector<RolloutGroup> batch;
    batch.reserve(static_cast<std::size_t>(config.grpo.batch_size));
    for (int b = 0; b < config.grpo.batch_size; ++b) {
      const TrainCase& c = cases[static_cast<std::size_t>(case_cursor % cases.size())];
      ++case_cursor;
      batch.push_back(run_two_stage_group(result.policy, c.scene, c.query,
                                          config.grpo.group_size, rollout_rng, config.reward,
                                          config.grpo, oracle_ptr));
    }
    return batch;
  };

  auto measure = [&](int step, const std::vector<RolloutGroup>& batch) {
    StepMetrics metrics = summarize_batch(step, batch);
    metrics.objective = grpo_batch_objective(result.policy, batch, config.grpo, reference);
    metrics.kl_to_reference = result.policy.kl_to(*reference);
    if (trace_sink) {
      for (const RolloutGroup& group : batch) trace_sink(step, group);
    }
    return metrics;
  };

  result.initial = measure(0, sample_batch());
  for (int step = 1; step <= config.steps; ++step) {
    std::vector<RolloutGroup> batch = sample_batch();
    result.timeline.push_back(measure(step, batch));
    policy_update(result.policy, batch, config.grpo, reference);
  }
  return result;
}

std::string metrics_csv(const std::vector<StepMetrics>& timeline) {
  std::string out = "step,mean_total,mean_acc,mean_desc,mean_len,mean_n1,mean_n2,answer_entropy\n";
  char line[256];
  for (const StepMetrics& m : timeline) {
    std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", m.step,
                  m.mean_total, m.mean_acc, m.mean_desc, m.mean_len, m.mean_n1, m.mean_n2,
                  m.answer_entropy);
    out += line;
  }
  return out;
}

}  // namespace segreward
