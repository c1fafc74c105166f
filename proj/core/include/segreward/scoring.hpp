#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "segreward/rewards.hpp"
#include "segreward/rollout.hpp"

namespace segreward {

/// One JSON line per group: both passes' raw text, token counts, the full
/// reward breakdown and the advantage per sample — the unit of CLI replay
/// and golden tests.
std::string group_to_trace_line(int step, const RolloutGroup& group);

/// Batch-scoring input. Two record shapes are accepted per line:
///  - flat sample: {"raw_first_pass", "raw_second_pass", "gt_answers",
///    "image_w", "image_h"} with an optional "group" key; consecutive lines
///    sharing a group value are scored as one group;
///  - group trace record as emitted by group_to_trace_line.
struct ScoreSample {
  std::string first_raw;
  std::optional<std::string> second_raw;
  std::optional<std::string> first_mask_b64;   // mask reward mode
  std::optional<std::string> second_mask_b64;  // mask reward mode
  std::optional<RewardBreakdown> recorded;     // present when replaying traces
  std::size_t line = 0;                        // 1-based input line
};

struct ScoreGroup {
  std::vector<ObjectAnswer> gt;
  std::optional<std::string> gt_mask_b64;
  int image_w = 0;
  int image_h = 0;
  std::vector<ScoreSample> samples;
  std::size_t first_line = 0;
};

/// Parses the JSONL stream; on a schema violation returns false and fills
/// `error` with a line-numbered message.
bool read_score_stream(std::istream& in, std::vector<ScoreGroup>& out, std::string& error);

struct ScoredGroup {
  std::vector<RewardBreakdown> breakdowns;
  std::vector<double> advantages;  // empty for singleton groups
};

/// Recomputes every breakdown from raw text (and embedded masks in mask
/// mode), applies the conditional length gate across the group, and derives
/// advantages for groups of two or more.
ScoredGroup score_group(const ScoreGroup& group, const RewardConfig& reward_cfg,
                        const GrpoConfig& grpo_cfg);

struct ScoreSummary {
  std::size_t groups = 0;
  std::size_t samples = 0;
  std::size_t parse_failures = 0;
  double mean_format = 0.0;
  double mean_non_repeat = 0.0;
  double mean_acc = 0.0;
  double mean_desc = 0.0;
  double mean_len_conditional = 0.0;
  double mean_total = 0.0;
};

ScoreSummary summarize_scores(const std::vector<ScoredGroup>& scored);

std::string breakdown_to_json(const RewardBreakdown& b);
std::string summary_to_json(const ScoreSummary& s);

}  // namespace segreward
