#include "segreward/grpo.hpp"

#include <cmath>

#include "segreward/errors.hpp"

namespace segreward {

GroupAdvantages group_advantages(const std::vector<double>& rewards, const GrpoConfig& cfg) {
  if (rewards.size() < 2)
    throw GroupTooSmallError("group_advantages: need at least 2 rewards");
  const double k = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= k;

  GroupAdvantages out;
  out.values.reserve(rewards.size());
  out.normalized = cfg.normalize_by_std;
  out.epsilon = cfg.epsilon;

  if (!cfg.normalize_by_std) {
    for (double r : rewards) out.values.push_back(r - mean);
    return out;
  }
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= k;  // population variance
  double denom = std::sqrt(var) + cfg.epsilon;
  for (double r : rewards) out.values.push_back((r - mean) / denom);
  return out;
}

double grpo_objective(const std::vector<double>& advantages,
                      const std::vector<double>& sample_logprobs) {
  if (advantages.size() != sample_logprobs.size())
    throw LengthMismatchError("grpo_objective: list sizes disagree");
  if (advantages.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < advantages.size(); ++i)
    sum += advantages[i] * sample_logprobs[i];
  return sum / static_cast<double>(advantages.size());
}

double kl_estimate(const std::vector<double>& logp_theta, const std::vector<double>& logp_ref) {
  if (logp_theta.size() != logp_ref.size())
    throw LengthMismatchError("kl_estimate: list sizes disagree");
  if (logp_theta.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < logp_theta.size(); ++i) {
    double d = logp_ref[i] - logp_theta[i];
    sum += std::exp(d) - d - 1.0;
  }
  return sum / static_cast<double>(logp_theta.size());
}

double regularized_objective(double objective, double kl, double beta) {
  return objective - beta * kl;
}

}  // namespace segreward
