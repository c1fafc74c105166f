#include "segreward/rewards.hpp"

#include <algorithm>
#include <unordered_set>

#include "segreward/errors.hpp"

namespace segreward {

double format_reward(std::string_view text, PromptMode mode) {
  return parse_response(text, mode).ok() ? 1.0 : 0.0;
}

double non_repeat_reward(std::string_view reasoning_text) {
  std::vector<std::string> sentences = split_sentences(reasoning_text);
  if (sentences.empty()) return 1.0;
  std::unordered_set<std::string> distinct(sentences.begin(), sentences.end());
  return static_cast<double>(distinct.size()) / static_cast<double>(sentences.size());
}

AccuracyComponents accuracy_reward(const std::vector<ObjectAnswer>& pred,
                                   const std::vector<ObjectAnswer>& gt,
                                   const RewardConfig& cfg) {
  AccuracyComponents acc;
  if (gt.empty() && pred.empty()) {
    acc.acc_iou = acc.acc_box_l1 = acc.acc_point_l1 = 1.0;
    acc.acc_total = 3.0;
    return acc;
  }
  if (gt.empty() || pred.empty()) return acc;

  const double quantum = 1.0 / static_cast<double>(std::max(gt.size(), pred.size()));
  Matching m = match_objects(gt, pred);
  for (auto [gi, pi] : m.pairs) {
    Box gb = Box::of(gt[gi]);
    Box pb = Box::of(pred[pi]);
    if (iou(gb, pb) > cfg.iou_threshold) acc.acc_iou += quantum;
    double l1 = cfg.box_l1_mode == BoxL1Mode::kSum ? box_l1(gb, pb) : box_l1_mean(gb, pb);
    if (l1 < cfg.box_l1_threshold) acc.acc_box_l1 += quantum;
    if (point_l1(gt[gi].px, gt[gi].py, pred[pi].px, pred[pi].py) < cfg.point_l1_threshold)
      acc.acc_point_l1 += quantum;
  }
  acc.acc_total = acc.acc_iou + acc.acc_box_l1 + acc.acc_point_l1;
  return acc;
}

double description_reward(const std::optional<std::vector<ObjectAnswer>>& second_pass_answers,
                          const std::vector<ObjectAnswer>& gt, const RewardConfig& cfg) {
  if (!second_pass_answers) return 0.0;
  return accuracy_reward(*second_pass_answers, gt, cfg).acc_total;
}

double length_reward(int n1, int n2, const LengthConfig& cfg) {
  double indicator = (n2 < n1) ? 1.0 : 0.0;
  double penalty = cfg.gamma * std::max(0, n1 - cfg.anchor_n0);
  return std::clamp(indicator - penalty, 0.0, 1.0);
}

std::vector<double> conditional_length(const std::vector<double>& group_acc_totals,
                                       const std::vector<double>& per_sample_len) {
  if (group_acc_totals.size() != per_sample_len.size())
    throw LengthMismatchError("conditional_length: list sizes disagree");
  if (group_acc_totals.empty())
    throw LengthMismatchError("conditional_length: empty group");
  bool any_credit = std::any_of(group_acc_totals.begin(), group_acc_totals.end(),
                                [](double a) { return a > 0.0; });
  if (any_credit) return per_sample_len;
  return std::vector<double>(per_sample_len.size(), 1.0);
}

double sam3_style_reward(const BinaryMask& merged_mask, const BinaryMask& gt_mask) {
  return mask_iou(merged_mask, gt_mask);
}

RewardBreakdown total_reward(double format, double non_repeat, const AccuracyComponents& acc,
                             double desc, double len_raw, double len_conditional) {
  RewardBreakdown b;
  b.format = format;
  b.non_repeat = non_repeat;
  b.acc_iou = acc.acc_iou;
  b.acc_box_l1 = acc.acc_box_l1;
  b.acc_point_l1 = acc.acc_point_l1;
  b.acc_total = acc.acc_total;
  b.desc = desc;
  b.len_raw = len_raw;
  b.len_conditional = len_conditional;
  b.base = b.format + b.non_repeat + b.acc_total;
  b.total = (b.base + b.desc) * b.len_conditional;
  return b;
}

RewardBreakdown score_sample(const SampleTexts& texts, const std::vector<ObjectAnswer>& gt,
                             const RewardConfig& cfg, const Tokenizer& tokenizer, int* out_n1,
                             int* out_n2) {
  int n1 = 0, n2 = 0;
  RewardBreakdown out;

  ParseResult first = parse_response(texts.first_pass_raw, PromptMode::kFirstPass);
  if (!first.ok()) {
    // Fail-closed: nothing content-dependent can be earned.
    out = total_reward(0.0, 0.0, AccuracyComponents{}, 0.0, 0.0, 1.0);
    if (out_n1) *out_n1 = 0;
    if (out_n2) *out_n2 = 0;
    return out;
  }

  const StructuredResponse& response = first.value();
  n1 = static_cast<int>(tokenizer.count(response.think));

  double non_repeat = non_repeat_reward(response.think);
  AccuracyComponents acc = accuracy_reward(response.answers, gt, cfg);

  double desc = 0.0;
  double len_raw = 0.0;
  std::optional<std::vector<ObjectAnswer>> second_answers;
  if (texts.second_pass_raw) {
    ParseResult second = parse_response(*texts.second_pass_raw, PromptMode::kSecondPass);
    if (second.ok()) {
      second_answers = second.value().answers;
      n2 = static_cast<int>(tokenizer.count(second.value().think));
      len_raw = length_reward(n1, n2, cfg.length);
    }
    // A second pass that fails to parse leaves n2 undefined: the comparative
    // length reward cannot be earned, so len_raw stays 0.
  }
  if (cfg.enable_desc) desc = description_reward(second_answers, gt, cfg);

  out = total_reward(1.0, non_repeat, acc, desc, len_raw, 1.0);
  if (out_n1) *out_n1 = n1;
  if (out_n2) *out_n2 = n2;
  return out;
}

void finalize_group_rewards(std::vector<RewardBreakdown>& group, const RewardConfig& cfg) {
  if (group.empty()) return;
  std::vector<double> acc_totals, lens;
  acc_totals.reserve(group.size());
  lens.reserve(group.size());
  for (const RewardBreakdown& b : group) {
    acc_totals.push_back(b.acc_total);
    lens.push_back(b.len_raw);
  }
  std::vector<double> gated = cfg.enable_len ? conditional_length(acc_totals, lens)
                                             : std::vector<double>(group.size(), 1.0);
  for (std::size_t i = 0; i < group.size(); ++i) {
    group[i].len_conditional = gated[i];
    group[i].total = (group[i].base + group[i].desc) * group[i].len_conditional;
  }
}

}  // namespace segreward
