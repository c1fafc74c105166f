#pragma once

#include <vector>

namespace segreward {

struct GrpoConfig {
  bool normalize_by_std = true;
  double epsilon = 1e-8;
  double kl_beta = 0.0;
  int group_size = 8;
  int batch_size = 16;
  double learning_rate = 0.1;  // logit-space step for the template policy
};

struct GroupAdvantages {
  std::vector<double> values;
  bool normalized = false;
  double epsilon = 1e-8;
};

/// Mean-centered (optionally std-normalized) group-relative advantages.
/// Uses the population standard deviation over the group. Sum of advantages
/// is zero up to floating point. Throws GroupTooSmallError for K < 2.
GroupAdvantages group_advantages(const std::vector<double>& rewards,
                                 const GrpoConfig& cfg = {});

/// (1/K) * sum_i A_i * logprob_i; a maximization target.
double grpo_objective(const std::vector<double>& advantages,
                      const std::vector<double>& sample_logprobs);

/// Non-negative per-token KL estimator: mean over tokens of
/// exp(d) - d - 1 with d = logp_ref - logp_theta. Zero when the sequences
/// agree; unbiased for KL(theta || ref) in expectation over samples.
double kl_estimate(const std::vector<double>& logp_theta,
                   const std::vector<double>& logp_ref);

/// objective - beta * kl.
double regularized_objective(double objective, double kl, double beta);

}  // namespace segreward
