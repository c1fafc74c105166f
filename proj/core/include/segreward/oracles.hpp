#pragma once

#include <cstdint>
#include <string>

namespace segreward {

struct OracleReport {
  std::string suite;
  int instances = 0;
  int mismatches = 0;
  double max_error = 0.0;
  bool passed = false;
  std::string detail;  // first failing instance, serialized for replay
};

/// Hungarian assignment against exhaustive enumeration: totals within 1e-12
/// and identical pair lists on every instance (N, K <= 6; exact-duplicate
/// boxes injected to exercise tie-breaking).
OracleReport run_matching_oracle(std::uint64_t seed, int count);

/// Analytic GRPO policy gradient against central finite differences on
/// random template-policy instances; passes when the max relative error is
/// below 1e-4.
OracleReport run_gradient_oracle(std::uint64_t seed, int count);

/// Closed-form mask IoU against set-based pixel counting on random masks up
/// to 16x16.
OracleReport run_mask_iou_oracle(std::uint64_t seed, int count);

/// Monte Carlo mean of the per-token KL estimator against closed-form
/// categorical KL; passes when every pair lands within 3 standard errors.
OracleReport run_kl_oracle(std::uint64_t seed, int pairs, int samples_per_pair = 10000);

OracleReport run_oracle_suite(const std::string& suite, std::uint64_t seed, int count);

}  // namespace segreward
