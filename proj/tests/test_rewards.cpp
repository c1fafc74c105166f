#include <doctest.h>

#include <cmath>

#include "segreward/rewards.hpp"
#include "segreward/rng.hpp"

using namespace segreward;

namespace {

ObjectAnswer obj(double x1, double y1, double x2, double y2, double px, double py) {
  return ObjectAnswer{x1, y1, x2, y2, px, py};
}

std::string first_pass(const std::string& think, const std::string& desc,
                       const std::string& payload) {
  return "<think>" + think + "</think><description>" + desc + "</description><answer>" +
         payload + "</answer>";
}

std::string second_pass(const std::string& think, const std::string& payload) {
  return "<think>" + think + "</think><answer>" + payload + "</answer>";
}

}  // namespace

TEST_CASE("format_reward") {
  std::string good = first_pass("t", "d", "[]");
  CHECK(format_reward(good, PromptMode::kFirstPass) == 1.0);
  CHECK(format_reward("<think>t</think><answer>[]", PromptMode::kSecondPass) == 0.0);
  CHECK(format_reward("<think>t</think><answer>[]</answer>", PromptMode::kFirstPass) == 0.0);
  CHECK(format_reward("<think>t</think><answer>[]</answer>", PromptMode::kSecondPass) == 1.0);
}

TEST_CASE("non_repeat_reward") {
  CHECK(non_repeat_reward("A. B. C.") == doctest::Approx(1.0));
  CHECK(non_repeat_reward("A. A. A. A.") == doctest::Approx(0.25));
  CHECK(non_repeat_reward("") == 1.0);
  CHECK(non_repeat_reward("A.  B. a. A.") == doctest::Approx(0.75));  // case-sensitive
}

TEST_CASE("accuracy_reward basics") {
  std::vector<ObjectAnswer> gt = {obj(0, 0, 100, 100, 50, 50),
                                  obj(200, 200, 300, 300, 250, 250)};
  SUBCASE("exact prediction earns everything") {
    AccuracyComponents acc = accuracy_reward(gt, gt);
    CHECK(acc.acc_iou == doctest::Approx(1.0));
    CHECK(acc.acc_box_l1 == doctest::Approx(1.0));
    CHECK(acc.acc_point_l1 == doctest::Approx(1.0));
    CHECK(acc.acc_total == doctest::Approx(3.0));
  }
  SUBCASE("empty conventions") {
    AccuracyComponents both = accuracy_reward({}, {});
    CHECK(both.acc_total == doctest::Approx(3.0));
    CHECK(accuracy_reward({}, gt).acc_total == 0.0);
    CHECK(accuracy_reward(gt, {}).acc_total == 0.0);
  }
}

TEST_CASE("accuracy_reward N=1 K=2 partial credit") {
  std::vector<ObjectAnswer> gt = {obj(0, 0, 100, 100, 50, 50)};
  std::vector<ObjectAnswer> pred = {obj(300, 300, 400, 400, 350, 350),
                                    obj(1, 1, 101, 101, 56, 56)};
  // Matched pair: IoU ~0.96 > 0.5, box L1 = 4 < 10, point L1 = 12 < 30.
  AccuracyComponents acc = accuracy_reward(pred, gt);
  CHECK(acc.acc_iou == doctest::Approx(0.5));
  CHECK(acc.acc_box_l1 == doctest::Approx(0.5));
  CHECK(acc.acc_point_l1 == doctest::Approx(0.5));
  CHECK(acc.acc_total == doctest::Approx(1.5));
}

TEST_CASE("accuracy thresholds are strict") {
  SUBCASE("IoU exactly 0.5 earns no IoU credit") {
    std::vector<ObjectAnswer> gt = {obj(0, 0, 10, 10, 5, 5)};
    std::vector<ObjectAnswer> pred = {obj(0, 0, 10, 5, 5, 4)};  // IoU = 50/100
    AccuracyComponents acc = accuracy_reward(pred, gt);
    CHECK(acc.acc_iou == 0.0);
    CHECK(acc.acc_box_l1 == doctest::Approx(1.0));  // L1 = 5
    CHECK(acc.acc_point_l1 == doctest::Approx(1.0));
  }
  SUBCASE("box L1 exactly 10 earns no box credit") {
    std::vector<ObjectAnswer> gt = {obj(0, 0, 100, 100, 50, 50)};
    std::vector<ObjectAnswer> pred = {obj(0, 0, 100, 110, 50, 50)};
    AccuracyComponents acc = accuracy_reward(pred, gt);
    CHECK(acc.acc_box_l1 == 0.0);
    CHECK(acc.acc_iou > 0.0);
  }
  SUBCASE("point L1 exactly 30 earns no point credit") {
    std::vector<ObjectAnswer> gt = {obj(0, 0, 100, 100, 50, 50)};
    std::vector<ObjectAnswer> pred = {obj(0, 0, 100, 100, 65, 65)};
    AccuracyComponents acc = accuracy_reward(pred, gt);
    CHECK(acc.acc_point_l1 == 0.0);
    CHECK(acc.acc_iou == doctest::Approx(1.0));
  }
  SUBCASE("mean box L1 mode rescales the distance") {
    RewardConfig cfg;
    cfg.box_l1_mode = BoxL1Mode::kMean;
    std::vector<ObjectAnswer> gt = {obj(0, 0, 100, 100, 50, 50)};
    std::vector<ObjectAnswer> pred = {obj(9, 9, 109, 109, 50, 50)};  // sum 36, mean 9
    CHECK(accuracy_reward(pred, gt).acc_box_l1 == 0.0);
    CHECK(accuracy_reward(pred, gt, cfg).acc_box_l1 == doctest::Approx(1.0));
  }
}

TEST_CASE("accuracy invariants") {
  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    int n = static_cast<int>(rng.uniform_int(1, 4));
    int k = static_cast<int>(rng.uniform_int(1, 4));
    auto gen = [&rng](int count) {
      std::vector<ObjectAnswer> out;
      for (int j = 0; j < count; ++j) {
        double w = rng.uniform(10, 100), h = rng.uniform(10, 100);
        double x = rng.uniform(0, 300), y = rng.uniform(0, 300);
        out.push_back(obj(x, y, x + w, y + h, x + w / 2, y + h / 2));
      }
      return out;
    };
    std::vector<ObjectAnswer> gt = gen(n), pred = gen(k);
    AccuracyComponents acc = accuracy_reward(pred, gt);

    // Components are multiples of the credit quantum in [0, 1].
    double quantum = 1.0 / std::max(n, k);
    for (double c : {acc.acc_iou, acc.acc_box_l1, acc.acc_point_l1}) {
      CHECK(c >= 0.0);
      CHECK(c <= 1.0 + 1e-12);
      double multiple = c / quantum;
      CHECK(std::abs(multiple - std::round(multiple)) < 1e-9);
    }
    CHECK(acc.acc_total ==
          doctest::Approx(acc.acc_iou + acc.acc_box_l1 + acc.acc_point_l1));

    // Simultaneous identical permutation of both lists changes nothing.
    std::vector<ObjectAnswer> gt_rev(gt.rbegin(), gt.rend());
    std::vector<ObjectAnswer> pred_rev(pred.rbegin(), pred.rend());
    AccuracyComponents rev = accuracy_reward(pred_rev, gt_rev);
    CHECK(rev.acc_total == doctest::Approx(acc.acc_total).epsilon(1e-12));
  }
}

TEST_CASE("description_reward") {
  std::vector<ObjectAnswer> gt = {obj(0, 0, 100, 100, 50, 50)};
  SUBCASE("exact second pass earns 3") {
    CHECK(description_reward(gt, gt) == doctest::Approx(3.0));
  }
  SUBCASE("parse failure fails closed") {
    CHECK(description_reward(std::nullopt, gt) == 0.0);
  }
  SUBCASE("IoU below threshold leaves only the L1 credits") {
    // IoU = 60/140 ~ 0.43, box L1 = 8, point L1 = 4.
    std::vector<ObjectAnswer> second = {obj(4, 0, 14, 10, 9, 5)};
    std::vector<ObjectAnswer> gt_small = {obj(0, 0, 10, 10, 5, 5)};
    double reward = description_reward(second, gt_small);
    AccuracyComponents acc = accuracy_reward(second, gt_small);
    CHECK(acc.acc_iou == 0.0);
    CHECK(reward == doctest::Approx(2.0));
  }
}

TEST_CASE("length_reward") {
  LengthConfig cfg;  // anchor 45, gamma 0.05
  CHECK(length_reward(50, 30, cfg) == doctest::Approx(0.75));
  CHECK(length_reward(40, 30, cfg) == doctest::Approx(1.0));
  CHECK(length_reward(80, 90, cfg) == 0.0);
  CHECK(length_reward(45, 44, cfg) == doctest::Approx(1.0));  // penalty starts past the anchor
  CHECK(length_reward(46, 45, cfg) == doctest::Approx(0.95));
  CHECK(length_reward(30, 30, cfg) == 0.0);  // strict n2 < n1
}

TEST_CASE("length_reward properties") {
  Rng rng(43);
  LengthConfig cfg;
  for (int i = 0; i < 500; ++i) {
    int n1 = static_cast<int>(rng.uniform_int(0, 300));
    int n2 = static_cast<int>(rng.uniform_int(0, 300));
    double v = length_reward(n1, n2, cfg);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    if (n1 > cfg.anchor_n0) CHECK(length_reward(n1 + 1, n2, cfg) <= v + 1e-12);
  }
  // Non-increasing in n2 across the n2 = n1 boundary.
  CHECK(length_reward(50, 49, cfg) >= length_reward(50, 50, cfg));
}

TEST_CASE("conditional_length") {
  std::vector<double> len = {0.2, 0.5, 0.0, 1.0};
  CHECK(conditional_length({0, 0, 0, 0}, len) == std::vector<double>{1, 1, 1, 1});
  CHECK(conditional_length({0, 1.5, 0, 0}, len) == len);
  CHECK(conditional_length({0.5}, {0.3}) == std::vector<double>{0.3});
  CHECK_THROWS_AS(conditional_length({0, 1}, {0.5}), LengthMismatchError);

  // Idempotence: a second application changes nothing.
  std::vector<double> once = conditional_length({0, 0, 0, 0}, len);
  CHECK(conditional_length({0, 0, 0, 0}, once) == once);
  std::vector<double> open_once = conditional_length({1, 0, 0, 0}, len);
  CHECK(conditional_length({1, 0, 0, 0}, open_once) == open_once);
}

TEST_CASE("total_reward composition") {
  AccuracyComponents full{1, 1, 1, 3};
  RewardBreakdown max = total_reward(1, 1, full, 3, 1, 1);
  CHECK(max.base == doctest::Approx(5.0));
  CHECK(max.total == doctest::Approx(8.0));

  RewardBreakdown zero = total_reward(0, 0, AccuracyComponents{}, 0, 0, 0.5);
  CHECK(zero.total == 0.0);

  AccuracyComponents three{1, 1, 1, 3};
  RewardBreakdown mid = total_reward(1, 0, three, 2, 0.5, 0.5);
  CHECK(mid.base == doctest::Approx(4.0));
  CHECK(mid.total == doctest::Approx(3.0));
}

TEST_CASE("sam3_style_reward") {
  BinaryMask gt(6, 4), pred(6, 4);
  for (int x = 0; x < 4; ++x) {
    gt.set(x, 0);
    gt.set(x, 1);
  }
  CHECK(sam3_style_reward(gt, gt) == doctest::Approx(1.0));
  CHECK(sam3_style_reward(pred, gt) == 0.0);  // empty prediction, nonempty gt

  // Half-overlapping strips: intersection 4, union 12.
  for (int x = 0; x < 4; ++x) {
    pred.set(x, 1);
    pred.set(x, 2);
  }
  CHECK(sam3_style_reward(pred, gt) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("score_sample fail-closed cascade") {
  std::vector<ObjectAnswer> gt = {obj(0, 0, 100, 100, 50, 50)};
  Tokenizer tokenizer;

  SUBCASE("unparseable first pass zeroes everything") {
    SampleTexts texts{"<think>only thinking", std::nullopt};
    RewardBreakdown b = score_sample(texts, gt);
    CHECK(b.format == 0.0);
    CHECK(b.non_repeat == 0.0);
    CHECK(b.acc_total == 0.0);
    CHECK(b.desc == 0.0);
    CHECK(b.total == 0.0);
  }
  SUBCASE("full credit sample") {
    std::string payload = render_answers(gt);
    SampleTexts texts{first_pass("One. Two. Three.", "the cup", payload),
                      second_pass("Quick look.", payload)};
    int n1 = 0, n2 = 0;
    RewardBreakdown b = score_sample(texts, gt, {}, tokenizer, &n1, &n2);
    CHECK(b.format == 1.0);
    CHECK(b.non_repeat == doctest::Approx(1.0));
    CHECK(b.acc_total == doctest::Approx(3.0));
    CHECK(b.desc == doctest::Approx(3.0));
    CHECK(n1 == 6);
    CHECK(n2 == 3);
    CHECK(b.len_raw == doctest::Approx(1.0));  // n2 < n1, n1 below the anchor
    CHECK(b.base == doctest::Approx(5.0));
  }
  SUBCASE("unparseable second pass: desc 0 and no length reward") {
    std::string payload = render_answers(gt);
    SampleTexts texts{first_pass("One. Two.", "the cup", payload), std::string("garbage")};
    RewardBreakdown b = score_sample(texts, gt);
    CHECK(b.format == 1.0);
    CHECK(b.desc == 0.0);
    CHECK(b.len_raw == 0.0);
    CHECK(b.acc_total == doctest::Approx(3.0));
  }
  SUBCASE("total is zero whenever format is zero (property)") {
    Rng rng(47);
    const std::vector<std::string> bad = {"", "<think>", "<answer>[]</answer>", "x",
                                          "<think>t</think>"};
    for (const std::string& text : bad) {
      RewardBreakdown b = score_sample(SampleTexts{text, std::nullopt}, gt);
      CHECK(b.total == 0.0);
    }
  }
}

TEST_CASE("finalize_group_rewards applies the gate over the group") {
  std::vector<ObjectAnswer> gt = {obj(0, 0, 100, 100, 50, 50)};
  std::string good_payload = render_answers(gt);

  auto make = [&](const std::string& payload, int think_tokens) {
    std::string think;
    for (int i = 0; i < think_tokens - 1; ++i) think += "w" + std::to_string(i) + " ";
    think += "end";
    return SampleTexts{first_pass(think, "the cup", payload),
                       second_pass("Short look here.", good_payload)};
  };

  SUBCASE("gate closed: all accuracy zero forces length to 1") {
    std::vector<RewardBreakdown> group = {
        score_sample(make("[]", 60), gt),
        score_sample(make("[]", 80), gt),
    };
    CHECK(group[0].len_raw > 0.0);  // n2=4 < n1=60, penalty 0.75
    finalize_group_rewards(group);
    CHECK(group[0].len_conditional == 1.0);
    CHECK(group[1].len_conditional == 1.0);
    for (const RewardBreakdown& b : group)
      CHECK(b.total == doctest::Approx((b.base + b.desc) * 1.0));
  }
  SUBCASE("gate open: lengths pass through") {
    std::vector<RewardBreakdown> group = {
        score_sample(make(good_payload, 60), gt),
        score_sample(make("[]", 80), gt),
    };
    finalize_group_rewards(group);
    CHECK(group[0].len_conditional == doctest::Approx(group[0].len_raw));
    CHECK(group[1].len_conditional == doctest::Approx(group[1].len_raw));
  }
  SUBCASE("enable_len=false pins the multiplier to 1") {
    RewardConfig cfg;
    cfg.enable_len = false;
    std::vector<RewardBreakdown> group = {score_sample(make(good_payload, 60), gt, cfg)};
    finalize_group_rewards(group, cfg);
    CHECK(group[0].len_conditional == 1.0);
  }
}
