#pragma once

#include <optional>
#include <string>
#include <vector>

#include "segreward/geometry.hpp"
#include "segreward/matching.hpp"
#include "segreward/structured.hpp"

namespace segreward {

/// Length-reward parameters: clip(1[n2 < n1] - gamma * max(0, n1 - anchor_n0), 0, 1).
struct LengthConfig {
  int anchor_n0 = 45;
  double gamma = 0.05;
};

enum class BoxL1Mode { kSum, kMean };
enum class RewardMode { kBoxPoint, kMask };

struct RewardConfig {
  LengthConfig length;
  double iou_threshold = 0.5;       // credit requires IoU strictly above
  double box_l1_threshold = 10.0;   // credit requires box L1 strictly below
  double point_l1_threshold = 30.0; // credit requires point L1 strictly below
  BoxL1Mode box_l1_mode = BoxL1Mode::kSum;
  RewardMode mode = RewardMode::kBoxPoint;
  bool enable_desc = true;
  bool enable_len = true;
};

/// Per-sample reward decomposition.
///   base  = format + non_repeat + acc_total
///   total = (base + desc) * len_conditional
struct RewardBreakdown {
  double format = 0.0;           // {0, 1}
  double non_repeat = 0.0;       // [0, 1]
  double acc_iou = 0.0;          // [0, 1]
  double acc_box_l1 = 0.0;       // [0, 1]
  double acc_point_l1 = 0.0;     // [0, 1]
  double acc_total = 0.0;        // [0, 3] (box/point mode), [0, 1] (mask mode)
  double desc = 0.0;             // same scale as acc_total
  double len_raw = 0.0;          // [0, 1]
  double len_conditional = 1.0;  // [0, 1]; 1 when gated off or disabled
  double base = 0.0;
  double total = 0.0;

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

struct AccuracyComponents {
  double acc_iou = 0.0;
  double acc_box_l1 = 0.0;
  double acc_point_l1 = 0.0;
  double acc_total = 0.0;
};

/// 1 iff the text parses in the given mode, else 0; all-or-nothing.
double format_reward(std::string_view text, PromptMode mode);

/// Distinct normalized sentences / total sentences; 1.0 for empty reasoning.
double non_repeat_reward(std::string_view reasoning_text);

/// Matching-based accuracy credit. Each matched pair can earn 1/max{N, K}
/// three times over: IoU > iou_threshold, box L1 < box_l1_threshold, point
/// L1 < point_l1_threshold (all strict). Empty vs empty scores full credit;
/// empty vs non-empty scores zero.
AccuracyComponents accuracy_reward(const std::vector<ObjectAnswer>& pred,
                                   const std::vector<ObjectAnswer>& gt,
                                   const RewardConfig& cfg = {});

/// Accuracy of the second-pass answers against ground truth; fail-closed 0
/// when the second pass did not parse (nullopt).
double description_reward(const std::optional<std::vector<ObjectAnswer>>& second_pass_answers,
                          const std::vector<ObjectAnswer>& gt, const RewardConfig& cfg = {});

/// clip(1[n2 < n1] - gamma * max(0, n1 - anchor_n0), 0, 1).
double length_reward(int n1, int n2, const LengthConfig& cfg = {});

/// Group gate: if any rollout earned accuracy credit, lengths pass through;
/// otherwise every entry becomes 1 (length shaping disabled for the group).
std::vector<double> conditional_length(const std::vector<double>& group_acc_totals,
                                       const std::vector<double>& per_sample_len);

/// Mask-mode accuracy: IoU of the merged predicted mask against ground truth.
double sam3_style_reward(const BinaryMask& merged_mask, const BinaryMask& gt_mask);

/// Composes base = format + non_repeat + acc_total and
/// total = (base + desc) * len_conditional from already-computed components.
RewardBreakdown total_reward(double format, double non_repeat, const AccuracyComponents& acc,
                             double desc, double len_raw, double len_conditional);

/// All per-sample components for one rollout in box/point mode; everything
/// content-dependent fails closed to 0 when the first pass does not parse.
/// len_conditional is left at 1 — it is a group-level quantity, applied by
/// finalize_group_rewards.
struct SampleTexts {
  std::string first_pass_raw;
  std::optional<std::string> second_pass_raw;  // nullopt when the pass was skipped
};

RewardBreakdown score_sample(const SampleTexts& texts, const std::vector<ObjectAnswer>& gt,
                             const RewardConfig& cfg = {}, const Tokenizer& tokenizer = {},
                             int* out_n1 = nullptr, int* out_n2 = nullptr);

/// Applies the conditional length gate across a group and recomputes totals.
void finalize_group_rewards(std::vector<RewardBreakdown>& group, const RewardConfig& cfg = {});

}  // namespace segreward
