#include "segreward/template_policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "segreward/errors.hpp"

namespace segreward {

namespace {

const std::vector<std::string> kFirstPassThink = {
    // 15 tokens
    "I look at the scene. One object stands out. It fits well.",
    // 30 tokens
    "I examine every object in the scene. Several candidates share similar traits. "
    "I compare their attributes one by one. The best match slowly becomes quite clear.",
    // 60 tokens
    "I start by scanning the whole scene carefully. There are several objects that could "
    "match the query. Some of them share the same category. I weigh color and position for "
    "each candidate. A few options can be ruled out quickly. The remaining choice agrees "
    "with every clue. I settle on that object now.",
    // 100 tokens
    "Let me think about this scene in great detail. Every object deserves a close and "
    "patient look. First I list all the things I can see. Then I revisit the query and its "
    "hidden intent. Many of these candidates look temptingly similar. I debate each hue and "
    "each relative placement. Doubt creeps in so I double check my reasoning. I circle back "
    "to compare the leading pair again. The evidence slowly tilts toward a single answer. "
    "After all this deliberation I commit to my final choice. It took long.",
};

const std::vector<std::string> kSecondPassThink = {
    // 15 tokens
    "The given phrase is direct. I spot the object. Easy to confirm.",
    // 30 tokens
    "The description names the target clearly. I match it against the visible objects. "
    "Only one candidate satisfies the phrase. I confirm the location and stop there.",
    // 60 tokens
    "The description gives me a concrete phrase to locate. I sweep the scene for anything "
    "that matches it. Two objects briefly compete for my attention. I check their colors "
    "against the stated cue. One of them fails the comparison at once. The survivor lines "
    "up with every detail. I lock onto it now.",
    // 100 tokens
    "Even with a description I want to be thorough. I restate the phrase to myself several "
    "times. Then I walk the scene from left to right. Each object gets compared against the "
    "quoted words. Some comparisons feel closer than they should. I linger on two plausible "
    "candidates for a while. Their differences emerge only after careful study. I weigh the "
    "hue and the stated placement again. Eventually the duplicate explanation falls apart. "
    "I accept the remaining object as the true referent. That closes my second reading of "
    "the scene.",
};

std::vector<int> sorted_copy(std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Phrase expected to resolve to exactly `want`; falls back through
// increasingly specific forms.
std::string exact_phrase(const Scene& scene, const std::vector<int>& want) {
  if (want.empty()) return "";
  std::vector<int> sorted_want = sorted_copy(want);
  const SceneObject& head = scene.object_by_id(want.front());

  std::vector<std::string> attempts = {
      head.class_name,
      head.color + " " + head.class_name,
      head.color + " " + head.class_name + " on the " + horizontal_side(scene, head),
  };
  for (const std::string& phrase : attempts)
    if (sorted_copy(resolve_phrase(scene, phrase)) == sorted_want) return phrase;
  return attempts[1];
}

ObjectAnswer perturbed(const ObjectAnswer& a, double image_w, double image_h) {
  // Shift chosen so the box stays in bounds; small enough to keep the point
  // credit, large enough to usually lose the box-L1 credit.
  double dx = std::min(12.0, image_w - a.x2);
  double dy = std::min(9.0, image_h - a.y2);
  ObjectAnswer out = a;
  out.x1 += dx;
  out.x2 += dx;
  out.y1 += dy;
  out.y2 += dy;
  out.px = std::min(out.px + dx, image_w);
  out.py = std::min(out.py + dy, image_h);
  return out;
}

// A 40x40 box provably ineligible for any accuracy credit: its area caps the
// IoU below 0.5 against any scene object, the width/height gap keeps box L1
// above 10, and the placement keeps the point more than 30 L1 away from every
// ground-truth point.
ObjectAnswer far_decoy(const Scene& scene, const std::vector<int>& target_ids) {
  double w = scene.image_w, h = scene.image_h;
  std::vector<std::pair<double, double>> centers = {
      {22.0, 22.0},         {w - 22.0, 22.0},      {22.0, h - 22.0}, {w - 22.0, h - 22.0},
      {w / 2.0, 22.0},      {w / 2.0, h - 22.0},   {22.0, h / 2.0},  {w - 22.0, h / 2.0},
  };
  double best_min = -1.0;
  std::pair<double, double> best = centers[0];
  for (const auto& c : centers) {
    double min_l1 = 1e18;
    for (int id : target_ids) {
      const ObjectAnswer& gt = scene.object_by_id(id).answer;
      min_l1 = std::min(min_l1, std::abs(c.first - gt.px) + std::abs(c.second - gt.py));
    }
    if (min_l1 > best_min) {
      best_min = min_l1;
      best = c;
    }
  }
  ObjectAnswer out;
  out.x1 = best.first - 20.0;
  out.x2 = best.first + 20.0;
  out.y1 = best.second - 20.0;
  out.y2 = best.second + 20.0;
  out.px = best.first;
  out.py = best.second;
  return out;
}

std::string scaffold_or_malformed_payload() { return "[{\"bbox_2d\": [12, 34"; }

double log_sum_exp(const std::vector<double>& z) {
  double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  return m + std::log(sum);
}

}  // namespace

std::vector<std::string> build_description_candidates(const Scene& scene,
                                                      const std::string& question) {
  std::vector<int> targets = resolve_phrase(scene, question);
  std::vector<std::string> out(4);

  out[static_cast<int>(DescRole::kFaithful)] = exact_phrase(scene, targets);
  if (out[static_cast<int>(DescRole::kFaithful)].empty() && !scene.objects.empty())
    out[static_cast<int>(DescRole::kFaithful)] = scene.objects[0].class_name;

  // Imperfect: grounded, but to the wrong granularity (superset or subset).
  std::string imperfect;
  if (!targets.empty()) {
    const SceneObject& head = scene.object_by_id(targets.front());
    std::vector<int> class_ids;
    for (const SceneObject& o : scene.objects)
      if (o.class_name == head.class_name) class_ids.push_back(o.id);
    if (class_ids.size() > targets.size()) {
      imperfect = head.class_name;  // superset
    } else if (targets.size() > 1) {
      imperfect = head.color + " " + head.class_name;  // subset
    }
  }
  if (imperfect.empty()) imperfect = "something in the scene";
  out[static_cast<int>(DescRole::kImperfect)] = imperfect;

  // Distractor: uniquely names a non-target object.
  std::string distractor;
  for (const SceneObject& o : scene.objects) {
    if (std::find(targets.begin(), targets.end(), o.id) != targets.end()) continue;
    distractor = exact_phrase(scene, {o.id});
    if (!distractor.empty()) break;
  }
  if (distractor.empty()) distractor = "the painted backdrop";
  out[static_cast<int>(DescRole::kDistractor)] = distractor;

  // Nonexistent: a color/class combination absent from the scene.
  std::string nonexistent;
  for (const std::string& color : scene_colors()) {
    for (const std::string& cls : scene_class_names()) {
      bool present = std::any_of(scene.objects.begin(), scene.objects.end(),
                                 [&](const SceneObject& o) {
                                   return o.class_name == cls && o.color == color;
                                 });
      if (!present) {
        nonexistent = color + " " + cls;
        break;
      }
    }
    if (!nonexistent.empty()) break;
  }
  out[static_cast<int>(DescRole::kNonexistent)] = nonexistent;
  return out;
}

std::string build_answer_payload(const Scene& scene, const std::string& question,
                                 const std::string& description, AnswerRole role,
                                 CandidateMode mode) {
  std::vector<int> targets = resolve_phrase(scene, question);

  if (mode == CandidateMode::kNegativeOnly) {
    switch (role) {
      case AnswerRole::kDescribed:
      case AnswerRole::kNear:
      case AnswerRole::kWrong:
        return render_answers({far_decoy(scene, targets)});
      case AnswerRole::kEmpty:
        return "[]";
      case AnswerRole::kMalformed:
        return scaffold_or_malformed_payload();
    }
  }

  switch (role) {
    case AnswerRole::kDescribed: {
      // Autoregressive coupling: the answer follows whatever the chosen
      // description grounds to.
      std::vector<int> described = resolve_phrase(scene, description);
      return render_answers(scene.answers_of(described));
    }
    case AnswerRole::kNear: {
      std::vector<ObjectAnswer> out;
      for (int id : targets)
        out.push_back(perturbed(scene.object_by_id(id).answer, scene.image_w, scene.image_h));
      return render_answers(out);
    }
    case AnswerRole::kWrong: {
      std::vector<ObjectAnswer> out;
      for (const SceneObject& o : scene.objects)
        if (std::find(targets.begin(), targets.end(), o.id) == targets.end())
          out.push_back(o.answer);
      if (out.empty()) out.push_back(far_decoy(scene, targets));
      return render_answers(out);
    }
    case AnswerRole::kEmpty:
      return "[]";
    case AnswerRole::kMalformed:
      return scaffold_or_malformed_payload();
  }
  return "[]";
}

const std::string& first_pass_think_text(int bucket) { return kFirstPassThink.at(bucket); }
const std::string& second_pass_think_text(int bucket) { return kSecondPassThink.at(bucket); }

TemplatePolicy::TemplatePolicy(TemplatePolicyConfig config) : config_(config) {
  logits_.resize(kNumFactors);
  logits_[kThink1Factor].assign(4, 0.0);
  logits_[kDescFactor].assign(4, 0.0);
  logits_[kAnswerFactor].assign(5, 0.0);
  logits_[kThink2Factor].assign(4, 0.0);
}

int TemplatePolicy::action_count(int factor) const {
  return static_cast<int>(logits_.at(factor).size());
}

std::vector<double> TemplatePolicy::probabilities(int factor) const {
  const std::vector<double>& z = logits_.at(factor);
  double lse = log_sum_exp(z);
  std::vector<double> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) p[i] = std::exp(z[i] - lse);
  return p;
}

double TemplatePolicy::log_probability(int factor, int action) const {
  const std::vector<double>& z = logits_.at(factor);
  return z.at(action) - log_sum_exp(z);
}

double TemplatePolicy::factor_entropy(int factor) const {
  std::vector<double> p = probabilities(factor);
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double TemplatePolicy::action_logprob(const std::vector<int>& actions) const {
  double sum = 0.0;
  for (int f = 0; f < kNumFactors && f < static_cast<int>(actions.size()); ++f)
    if (actions[f] >= 0) sum += log_probability(f, actions[f]);
  return sum;
}

double TemplatePolicy::kl_to(const TemplatePolicy& reference) const {
  double total = 0.0;
  for (int f = 0; f < kNumFactors; ++f) {
    std::vector<double> p = probabilities(f);
    for (int a = 0; a < action_count(f); ++a) {
      if (p[a] <= 0.0) continue;
      total += p[a] * (log_probability(f, a) - reference.log_probability(f, a));
    }
  }
  return total;
}

int TemplatePolicy::parameter_count() const {
  int n = 0;
  for (const auto& z : logits_) n += static_cast<int>(z.size());
  return n;
}

double TemplatePolicy::parameter(int index) const {
  for (const auto& z : logits_) {
    if (index < static_cast<int>(z.size())) return z[index];
    index -= static_cast<int>(z.size());
  }
  throw std::out_of_range("TemplatePolicy::parameter: bad index");
}

void TemplatePolicy::set_parameter(int index, double value) {
  for (auto& z : logits_) {
    if (index < static_cast<int>(z.size())) {
      z[index] = value;
      return;
    }
    index -= static_cast<int>(z.size());
  }
  throw std::out_of_range("TemplatePolicy::set_parameter: bad index");
}

void TemplatePolicy::nudge_parameter(int index, double delta) {
  set_parameter(index, parameter(index) + delta);
}

std::vector<double> TemplatePolicy::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& z : logits_) flat.insert(flat.end(), z.begin(), z.end());
  return flat;
}

void TemplatePolicy::set_parameters(const std::vector<double>& flat) {
  if (static_cast<int>(flat.size()) != parameter_count())
    throw LengthMismatchError("TemplatePolicy::set_parameters: size mismatch");
  std::size_t at = 0;
  for (auto& z : logits_)
    for (double& v : z) v = flat[at++];
}

std::shared_ptr<Policy> TemplatePolicy::snapshot() const {
  return std::make_shared<TemplatePolicy>(*this);
}

GenerationRecord TemplatePolicy::generate(const std::string& prompt, const Scene& scene,
                                          DecodeMode mode, Rng& rng) {
  const bool first_pass = prompt.find(kDescriptionOpen) != std::string::npos;
  std::string question = extract_question(prompt).value_or("");

  auto choose = [&](int factor) -> int {
    std::vector<double> p = probabilities(factor);
    if (mode == DecodeMode::kGreedy) {
      return static_cast<int>(
          std::max_element(p.begin(), p.end()) - p.begin());
    }
    return static_cast<int>(rng.categorical(p));
  };

  GenerationRecord record;
  record.actions.assign(kNumFactors, -1);
  Tokenizer tokenizer;

  auto append_tokens = [&](std::string_view text, double first_logprob, double entropy,
                           bool answer_span) {
    std::vector<std::string> tokens = tokenizer.tokenize(text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      TokenRecord t;
      t.token = std::move(tokens[i]);
      t.logprob = (i == 0) ? first_logprob : 0.0;
      t.entropy = entropy;
      t.answer_span = answer_span;
      record.tokens.push_back(std::move(t));
    }
  };

  if (first_pass) {
    int think_action = choose(kThink1Factor);
    int desc_action = choose(kDescFactor);
    int answer_action = choose(kAnswerFactor);
    record.actions[kThink1Factor] = think_action;
    record.actions[kDescFactor] = desc_action;
    record.actions[kAnswerFactor] = answer_action;

    std::vector<std::string> descriptions = build_description_candidates(scene, question);
    const std::string& think_text = first_pass_think_text(think_action);
    const std::string& desc_text = descriptions.at(desc_action);
    std::string payload =
        build_answer_payload(scene, question, desc_text,
                             static_cast<AnswerRole>(answer_action), config_.candidate_mode);

    record.text = std::string(kThinkOpen) + think_text + std::string(kThinkClose) + "\n" +
                  std::string(kDescriptionOpen) + desc_text + std::string(kDescriptionClose) +
                  "\n" + std::string(kAnswerOpen) + payload + std::string(kAnswerClose);

    append_tokens(kThinkOpen, 0.0, 0.0, false);
    append_tokens(think_text, log_probability(kThink1Factor, think_action),
                  factor_entropy(kThink1Factor), false);
    append_tokens(kThinkClose, 0.0, 0.0, false);
    append_tokens(kDescriptionOpen, 0.0, 0.0, false);
    append_tokens(desc_text, log_probability(kDescFactor, desc_action),
                  factor_entropy(kDescFactor), false);
    append_tokens(kDescriptionClose, 0.0, 0.0, false);
    append_tokens(kAnswerOpen, 0.0, 0.0, false);
    append_tokens(payload, log_probability(kAnswerFactor, answer_action),
                  factor_entropy(kAnswerFactor), true);
    append_tokens(kAnswerClose, 0.0, 0.0, false);
    return record;
  }

  // Second pass: the question slot carries the description; the spatial
  // answer is the scripted grounding of that phrase (the verifier role).
  int think_action = choose(kThink2Factor);
  record.actions[kThink2Factor] = think_action;
  const std::string& think_text = second_pass_think_text(think_action);
  std::vector<int> described = resolve_phrase(scene, question);
  std::string payload = render_answers(scene.answers_of(described));

  record.text = std::string(kThinkOpen) + think_text + std::string(kThinkClose) + "\n" +
                std::string(kAnswerOpen) + payload + std::string(kAnswerClose);

  append_tokens(kThinkOpen, 0.0, 0.0, false);
  append_tokens(think_text, log_probability(kThink2Factor, think_action),
                factor_entropy(kThink2Factor), false);
  append_tokens(kThinkClose, 0.0, 0.0, false);
  append_tokens(kAnswerOpen, 0.0, 0.0, false);
  append_tokens(payload, 0.0, 0.0, true);
  append_tokens(kAnswerClose, 0.0, 0.0, false);
  return record;
}

}  // namespace segreward
