#include "segreward/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "segreward/errors.hpp"
#include "segreward/matching.hpp"
#include "segreward/parallel.hpp"
#include "segreward/rng.hpp"
#include "segreward/train.hpp"

namespace segreward {

namespace {

std::vector<ObjectAnswer> random_objects(Rng& rng, int count, double image_w, double image_h,
                                         const std::vector<ObjectAnswer>& duplicate_pool) {
  std::vector<ObjectAnswer> out;
  for (int i = 0; i < count; ++i) {
    if (!duplicate_pool.empty() && rng.bernoulli(0.3)) {
      // Exact duplicate: forces ties in the assignment.
      out.push_back(duplicate_pool[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(duplicate_pool.size()) - 1))]);
      continue;
    }
    double w = rng.uniform(10.0, 200.0);
    double h = rng.uniform(10.0, 200.0);
    double x1 = rng.uniform(0.0, image_w - w);
    double y1 = rng.uniform(0.0, image_h - h);
    ObjectAnswer a;
    a.x1 = x1;
    a.y1 = y1;
    a.x2 = x1 + w;
    a.y2 = y1 + h;
    a.px = x1 + w / 2.0;
    a.py = y1 + h / 2.0;
    out.push_back(a);
  }
  return out;
}

std::string describe_instance(const std::vector<ObjectAnswer>& gt,
                              const std::vector<ObjectAnswer>& pred) {
  std::ostringstream os;
  os << "gt=" << render_answers(gt) << " pred=" << render_answers(pred);
  return os.str();
}

}  // namespace

OracleReport run_matching_oracle(std::uint64_t seed, int count) {
  OracleReport report;
  report.suite = "matching";
  report.instances = count;

  std::vector<int> mismatch(static_cast<std::size_t>(count), 0);
  std::vector<double> errors(static_cast<std::size_t>(count), 0.0);
  std::vector<std::string> details(static_cast<std::size_t>(count));

  parallel_for_indexed(static_cast<std::size_t>(count), [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    int n = static_cast<int>(rng.uniform_int(0, 6));
    int k = static_cast<int>(rng.uniform_int(0, 6));
    std::vector<ObjectAnswer> gt = random_objects(rng, n, 640.0, 480.0, {});
    std::vector<ObjectAnswer> pred = random_objects(rng, k, 640.0, 480.0, gt);

    Matching fast = match_objects(gt, pred);
    Matching slow = brute_force_match(gt, pred);
    double err = std::abs(fast.total_iou - slow.total_iou);
    errors[i] = err;
    if (err > 1e-12 || fast.pairs != slow.pairs) {
      mismatch[i] = 1;
      details[i] = describe_instance(gt, pred);
    }
  });

  for (std::size_t i = 0; i < mismatch.size(); ++i) {
    report.max_error = std::max(report.max_error, errors[i]);
    if (mismatch[i]) {
      ++report.mismatches;
      if (report.detail.empty()) report.detail = details[i];
    }
  }
  report.passed = report.mismatches == 0;
  return report;
}

OracleReport run_gradient_oracle(std::uint64_t seed, int count) {
  OracleReport report;
  report.suite = "gradient";
  report.instances = count;

  std::vector<double> errors(static_cast<std::size_t>(count), 0.0);
  std::vector<std::string> details(static_cast<std::size_t>(count));

  parallel_for_indexed(static_cast<std::size_t>(count), [&](std::size_t i) {
    Rng rng(mix_seed(seed, 0xF00D + i));
    Scene scene = generate_scene(rng.next_u64(), SceneConfig{});
    QueryCase query;
    try {
      query = generate_query(scene, rng.bernoulli(0.5) ? Difficulty::kHard : Difficulty::kEasy,
                             rng.next_u64());
    } catch (const UnresolvableError&) {
      query = generate_query(scene, Difficulty::kEasy, rng.next_u64());
    }

    TemplatePolicy policy;
    for (int p = 0; p < policy.parameter_count(); ++p)
      policy.set_parameter(p, rng.uniform(-1.5, 1.5));
    TemplatePolicy reference;
    for (int p = 0; p < reference.parameter_count(); ++p)
      reference.set_parameter(p, rng.uniform(-1.5, 1.5));

    GrpoConfig cfg;
    cfg.kl_beta = (i % 2 == 0) ? 0.0 : 0.3;
    RewardConfig reward_cfg;

    std::vector<RolloutGroup> batch;
    for (int g = 0; g < 2; ++g)
      batch.push_back(
          run_two_stage_group(policy, scene, query, 4, rng, reward_cfg, cfg, nullptr));

    std::vector<double> analytic = grpo_batch_gradient(policy, batch, cfg, &reference);
    const double h = 1e-5;
    double worst = 0.0;
    for (int p = 0; p < policy.parameter_count(); ++p) {
      TemplatePolicy plus = policy;
      TemplatePolicy minus = policy;
      plus.nudge_parameter(p, h);
      minus.nudge_parameter(p, -h);
      double fd = (grpo_batch_objective(plus, batch, cfg, &reference) -
                   grpo_batch_objective(minus, batch, cfg, &reference)) /
                  (2.0 * h);
      double rel = std::abs(analytic[p] - fd) /
                   std::max({std::abs(analytic[p]), std::abs(fd), 1e-2});
      worst = std::max(worst, rel);
    }
    errors[i] = worst;
    if (worst >= 1e-4) {
      std::ostringstream os;
      os << "instance " << i << " max rel err " << worst;
      details[i] = os.str();
    }
  });

  for (std::size_t i = 0; i < errors.size(); ++i) {
    report.max_error = std::max(report.max_error, errors[i]);
    if (!details[i].empty()) {
      ++report.mismatches;
      if (report.detail.empty()) report.detail = details[i];
    }
  }
  report.passed = report.max_error < 1e-4;
  return report;
}

OracleReport run_mask_iou_oracle(std::uint64_t seed, int count) {
  OracleReport report;
  report.suite = "mask_iou";
  report.instances = count;

  std::vector<double> errors(static_cast<std::size_t>(count), 0.0);
  std::vector<int> mismatch(static_cast<std::size_t>(count), 0);

  parallel_for_indexed(static_cast<std::size_t>(count), [&](std::size_t i) {
    Rng rng(mix_seed(seed, 0x3A5C + i));
    int w = static_cast<int>(rng.uniform_int(1, 16));
    int h = static_cast<int>(rng.uniform_int(1, 16));
    double density_a = rng.next_double();
    double density_b = rng.next_double();
    BinaryMask a(w, h), b(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (rng.bernoulli(density_a)) a.set(x, y, true);
        if (rng.bernoulli(density_b)) b.set(x, y, true);
      }
    }
    // Independent route: explicit pixel index sets.
    std::set<int> sa, sb;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (a.at(x, y)) sa.insert(y * w + x);
        if (b.at(x, y)) sb.insert(y * w + x);
      }
    std::vector<int> inter, uni;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(uni));
    double expected =
        uni.empty() ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
    double got = mask_iou(a, b);
    errors[i] = std::abs(got - expected);
    if (errors[i] > 1e-12) mismatch[i] = 1;
  });

  for (std::size_t i = 0; i < errors.size(); ++i) {
    report.max_error = std::max(report.max_error, errors[i]);
    if (mismatch[i]) ++report.mismatches;
  }
  report.passed = report.mismatches == 0;
  return report;
}

OracleReport run_kl_oracle(std::uint64_t seed, int pairs, int samples_per_pair) {
  OracleReport report;
  report.suite = "kl";
  report.instances = pairs;

  std::vector<double> zscores(static_cast<std::size_t>(pairs), 0.0);
  std::vector<int> mismatch(static_cast<std::size_t>(pairs), 0);

  parallel_for_indexed(static_cast<std::size_t>(pairs), [&](std::size_t i) {
    Rng rng(mix_seed(seed, 0x5E6F + i));
    TemplatePolicy theta, ref;
    for (int p = 0; p < theta.parameter_count(); ++p) {
      theta.set_parameter(p, rng.uniform(-2.0, 2.0));
      ref.set_parameter(p, rng.uniform(-2.0, 2.0));
    }
    const int factor = TemplatePolicy::kAnswerFactor;
    std::vector<double> p = theta.probabilities(factor);

    double closed = 0.0;
    for (int a = 0; a < theta.action_count(factor); ++a)
      if (p[a] > 0.0)
        closed += p[a] * (theta.log_probability(factor, a) - ref.log_probability(factor, a));

    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < samples_per_pair; ++s) {
      int action = static_cast<int>(rng.categorical(p));
      double est = kl_estimate({theta.log_probability(factor, action)},
                               {ref.log_probability(factor, action)});
      sum += est;
      sum_sq += est * est;
    }
    double n = static_cast<double>(samples_per_pair);
    double mean = sum / n;
    double var = std::max(0.0, sum_sq / n - mean * mean);
    double se = std::sqrt(var / n);
    double z = se > 0.0 ? std::abs(mean - closed) / se : (mean == closed ? 0.0 : 1e18);
    zscores[i] = z;
    if (z > 3.0) mismatch[i] = 1;
  });

  for (std::size_t i = 0; i < zscores.size(); ++i) {
    report.max_error = std::max(report.max_error, zscores[i]);
    if (mismatch[i]) ++report.mismatches;
  }
  report.passed = report.mismatches == 0;
  report.detail = "max |mean - closed| in standard errors: " + std::to_string(report.max_error);
  return report;
}

OracleReport run_oracle_suite(const std::string& suite, std::uint64_t seed, int count) {
  if (suite == "matching") return run_matching_oracle(seed, count);
  if (suite == "gradient") return run_gradient_oracle(seed, count);
  if (suite == "mask_iou") return run_mask_iou_oracle(seed, count);
  if (suite == "kl") return run_kl_oracle(seed, count);
  throw InvalidConfigError("unknown oracle suite: " + suite +
                           " (expected matching, gradient, mask_iou or kl)");
}

}  // namespace segreward
