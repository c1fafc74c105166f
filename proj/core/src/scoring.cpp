#include "segreward/scoring.hpp"

#include <json.hpp>

#include "segreward/errors.hpp"
#include "segreward/grpo.hpp"

namespace segreward {

namespace {

using nlohmann::json;

json answers_to_json(const std::vector<ObjectAnswer>& answers) {
  json arr = json::array();
  for (const ObjectAnswer& a : answers) {
    json item;
    item["bbox_2d"] = {a.x1, a.y1, a.x2, a.y2};
    item["point_2d"] = {a.px, a.py};
    arr.push_back(std::move(item));
  }
  return arr;
}

std::vector<ObjectAnswer> answers_from_json(const json& arr) {
  if (!arr.is_array()) throw EngineError("gt_answers must be an array");
  std::vector<ObjectAnswer> out;
  for (const json& item : arr) {
    if (!item.is_object() || !item.contains("bbox_2d") || !item.contains("point_2d"))
      throw EngineError("gt answer needs bbox_2d and point_2d");
    const json& b = item["bbox_2d"];
    const json& p = item["point_2d"];
    if (!b.is_array() || b.size() != 4 || !p.is_array() || p.size() != 2)
      throw EngineError("gt answer has wrong arity");
    ObjectAnswer a;
    a.x1 = b[0].get<double>();
    a.y1 = b[1].get<double>();
    a.x2 = b[2].get<double>();
    a.y2 = b[3].get<double>();
    a.px = p[0].get<double>();
    a.py = p[1].get<double>();
    out.push_back(a);
  }
  return out;
}

json breakdown_json(const RewardBreakdown& b) {
  json j;
  j["format"] = b.format;
  j["non_repeat"] = b.non_repeat;
  j["acc_iou"] = b.acc_iou;
  j["acc_box_l1"] = b.acc_box_l1;
  j["acc_point_l1"] = b.acc_point_l1;
  j["acc_total"] = b.acc_total;
  j["desc"] = b.desc;
  j["len_raw"] = b.len_raw;
  j["len_conditional"] = b.len_conditional;
  j["base"] = b.base;
  j["total"] = b.total;
  return j;
}

RewardBreakdown breakdown_from_json(const json& j) {
  RewardBreakdown b;
  b.format = j.at("format").get<double>();
  b.non_repeat = j.at("non_repeat").get<double>();
  b.acc_iou = j.at("acc_iou").get<double>();
  b.acc_box_l1 = j.at("acc_box_l1").get<double>();
  b.acc_point_l1 = j.at("acc_point_l1").get<double>();
  b.acc_total = j.at("acc_total").get<double>();
  b.desc = j.at("desc").get<double>();
  b.len_raw = j.at("len_raw").get<double>();
  b.len_conditional = j.at("len_conditional").get<double>();
  b.base = j.at("base").get<double>();
  b.total = j.at("total").get<double>();
  return b;
}

}  // namespace

std::string group_to_trace_line(int step, const RolloutGroup& group) {
  json j;
  j["step"] = step;
  j["scene_seed"] = group.scene_seed;
  j["query"] = group.query;
  j["difficulty"] = group.difficulty == Difficulty::kHard ? "hard" : "easy";
  j["image_w"] = group.image_w;
  j["image_h"] = group.image_h;
  j["target_ids"] = group.target_ids;
  j["gt_answers"] = answers_to_json(group.gt_answers);
  if (group.gt_mask) j["gt_mask_b64"] = mask_to_base64(*group.gt_mask);

  json samples = json::array();
  for (const RolloutSample& s : group.samples) {
    json sj;
    sj["first_pass_raw"] = s.first_gen.text;
    sj["first_error"] = s.first_error ? json(to_string(s.first_error->kind)) : json(nullptr);
    sj["policy_failure"] = s.policy_failure ? json(*s.policy_failure) : json(nullptr);
    sj["second_pass_raw"] = s.second_gen ? json(s.second_gen->text) : json(nullptr);
    sj["second_error"] = s.second_error ? json(to_string(s.second_error->kind)) : json(nullptr);
    sj["n1"] = s.n1;
    sj["n2"] = s.n2;
    sj["answer_entropy"] = answer_entropy(s.first_gen);
    sj["logprob"] = s.first_gen.logprob();
    if (s.first_mask) sj["first_mask_b64"] = mask_to_base64(*s.first_mask);
    if (s.second_mask) sj["second_mask_b64"] = mask_to_base64(*s.second_mask);
    sj["reward"] = breakdown_json(s.reward);
    sj["advantage"] = s.advantage;
    samples.push_back(std::move(sj));
  }
  j["samples"] = std::move(samples);
  return j.dump();
}

bool read_score_stream(std::istream& in, std::vector<ScoreGroup>& out, std::string& error) {
  std::string line;
  std::size_t line_no = 0;
  bool pending_flat = false;
  json pending_key;  // group key of the open flat group

  auto fail = [&](const std::string& what) {
    error = "line " + std::to_string(line_no) + ": " + what;
    return false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) return fail("not valid JSON");
    if (!j.is_object()) return fail("record must be a JSON object");

    try {
      if (j.contains("samples")) {
        // Group trace record.
        ScoreGroup g;
        g.first_line = line_no;
        g.gt = answers_from_json(j.at("gt_answers"));
        g.image_w = j.at("image_w").get<int>();
        g.image_h = j.at("image_h").get<int>();
        if (j.contains("gt_mask_b64")) g.gt_mask_b64 = j["gt_mask_b64"].get<std::string>();
        for (const json& sj : j.at("samples")) {
          ScoreSample s;
          s.line = line_no;
          s.first_raw = sj.at("first_pass_raw").get<std::string>();
          if (sj.contains("second_pass_raw") && !sj["second_pass_raw"].is_null())
            s.second_raw = sj["second_pass_raw"].get<std::string>();
          if (sj.contains("first_mask_b64"))
            s.first_mask_b64 = sj["first_mask_b64"].get<std::string>();
          if (sj.contains("second_mask_b64"))
            s.second_mask_b64 = sj["second_mask_b64"].get<std::string>();
          if (sj.contains("reward")) s.recorded = breakdown_from_json(sj["reward"]);
          g.samples.push_back(std::move(s));
        }
        out.push_back(std::move(g));
        pending_flat = false;
        continue;
      }

      // Flat sample record.
      if (!j.contains("raw_first_pass")) return fail("missing raw_first_pass");
      if (!j.contains("gt_answers")) return fail("missing gt_answers");
      if (!j.contains("image_w") || !j.contains("image_h"))
        return fail("missing image_w/image_h");
      ScoreSample s;
      s.line = line_no;
      s.first_raw = j["raw_first_pass"].get<std::string>();
      if (j.contains("raw_second_pass") && !j["raw_second_pass"].is_null())
        s.second_raw = j["raw_second_pass"].get<std::string>();
      if (j.contains("first_mask_b64")) s.first_mask_b64 = j["first_mask_b64"].get<std::string>();
      if (j.contains("second_mask_b64"))
        s.second_mask_b64 = j["second_mask_b64"].get<std::string>();

      json key = j.contains("group") ? j["group"] : json(nullptr);
      bool joins_previous = pending_flat && !key.is_null() && key == pending_key;
      if (!joins_previous) {
        ScoreGroup g;
        g.first_line = line_no;
        g.gt = answers_from_json(j["gt_answers"]);
        g.image_w = j["image_w"].get<int>();
        g.image_h = j["image_h"].get<int>();
        if (j.contains("gt_mask_b64")) g.gt_mask_b64 = j["gt_mask_b64"].get<std::string>();
        out.push_back(std::move(g));
      }
      out.back().samples.push_back(std::move(s));
      pending_flat = true;
      pending_key = key;
    } catch (const std::exception& e) {
      return fail(e.what());
    }
  }
  return true;
}

ScoredGroup score_group(const ScoreGroup& group, const RewardConfig& reward_cfg,
                        const GrpoConfig& grpo_cfg) {
  ScoredGroup out;
  const bool mask_mode = reward_cfg.mode == RewardMode::kMask;
  Tokenizer tokenizer;

  for (const ScoreSample& s : group.samples) {
    if (!mask_mode) {
      SampleTexts texts{s.first_raw, s.second_raw};
      out.breakdowns.push_back(score_sample(texts, group.gt, reward_cfg, tokenizer));
      continue;
    }

    // Mask mode: text rewards are recomputed from the raw passes; the
    // accuracy and description rewards come from the embedded masks.
    RewardBreakdown b;
    ParseResult first = parse_response(s.first_raw, PromptMode::kFirstPass);
    if (!first.ok()) {
      b = total_reward(0.0, 0.0, AccuracyComponents{}, 0.0, 0.0, 1.0);
      out.breakdowns.push_back(b);
      continue;
    }
    if (!group.gt_mask_b64)
      throw EngineError("score_group: mask mode requires gt_mask_b64");
    BinaryMask gt_mask = mask_from_base64(*group.gt_mask_b64);

    AccuracyComponents acc;
    if (s.first_mask_b64) {
      acc.acc_iou = sam3_style_reward(mask_from_base64(*s.first_mask_b64), gt_mask);
      acc.acc_total = acc.acc_iou;
    }
    double desc = 0.0;
    double len_raw = 0.0;
    int n1 = static_cast<int>(tokenizer.count(first.value().think));
    if (s.second_raw) {
      ParseResult second = parse_response(*s.second_raw, PromptMode::kSecondPass);
      if (second.ok()) {
        int n2 = static_cast<int>(tokenizer.count(second.value().think));
        len_raw = length_reward(n1, n2, reward_cfg.length);
        if (reward_cfg.enable_desc && s.second_mask_b64)
          desc = sam3_style_reward(mask_from_base64(*s.second_mask_b64), gt_mask);
      }
    }
    b = total_reward(1.0, non_repeat_reward(first.value().think), acc, desc, len_raw, 1.0);
    out.breakdowns.push_back(b);
  }

  finalize_group_rewards(out.breakdowns, reward_cfg);
  if (out.breakdowns.size() >= 2) {
    std::vector<double> totals;
    for (const RewardBreakdown& b : out.breakdowns) totals.push_back(b.total);
    out.advantages = group_advantages(totals, grpo_cfg).values;
  }
  return out;
}

ScoreSummary summarize_scores(const std::vector<ScoredGroup>& scored) {
  ScoreSummary s;
  for (const ScoredGroup& g : scored) {
    ++s.groups;
    for (const RewardBreakdown& b : g.breakdowns) {
      ++s.samples;
      if (b.format == 0.0) ++s.parse_failures;
      s.mean_format += b.format;
      s.mean_non_repeat += b.non_repeat;
      s.mean_acc += b.acc_total;
      s.mean_desc += b.desc;
      s.mean_len_conditional += b.len_conditional;
      s.mean_total += b.total;
    }
  }
  if (s.samples > 0) {
    double n = static_cast<double>(s.samples);
    s.mean_format /= n;
    s.mean_non_repeat /= n;
    s.mean_acc /= n;
    s.mean_desc /= n;
    s.mean_len_conditional /= n;
    s.mean_total /= n;
  }
  return s;
}

std::string breakdown_to_json(const RewardBreakdown& b) { return breakdown_json(b).dump(); }

std::string summary_to_json(const ScoreSummary& s) {
  json j;
  j["groups"] = s.groups;
  j["samples"] = s.samples;
  j["parse_failures"] = s.parse_failures;
  j["mean_format"] = s.mean_format;
  j["mean_non_repeat"] = s.mean_non_repeat;
  j["mean_acc"] = s.mean_acc;
  j["mean_desc"] = s.mean_desc;
  j["mean_len_conditional"] = s.mean_len_conditional;
  j["mean_total"] = s.mean_total;
  return j.dump();
}

}  // namespace segreward
