#include "segreward/structured.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

#include <json.hpp>

namespace segreward {

namespace {

bool is_space_byte(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct_byte(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

bool all_whitespace(std::string_view s) {
  return std::all_of(s.begin(), s.end(), is_space_byte);
}

struct TagHit {
  std::string_view literal;
  std::vector<std::size_t> positions;
};

std::vector<std::size_t> find_all(std::string_view text, std::string_view needle) {
  std::vector<std::size_t> out;
  std::size_t pos = text.find(needle);
  while (pos != std::string_view::npos) {
    out.push_back(pos);
    pos = text.find(needle, pos + 1);
  }
  return out;
}

ParseError missing_tag(std::string_view tag) {
  ParseError e;
  e.kind = ParseErrorKind::kMissingTag;
  e.tag = std::string(tag);
  e.message = "missing tag " + std::string(tag);
  return e;
}

ParseError order_violation(std::string message) {
  ParseError e;
  e.kind = ParseErrorKind::kTagOrderViolation;
  e.message = std::move(message);
  return e;
}

ParseError malformed_json(std::string message) {
  ParseError e;
  e.kind = ParseErrorKind::kMalformedJson;
  e.message = std::move(message);
  return e;
}

ParseError invalid_box(int index, std::string message) {
  ParseError e;
  e.kind = ParseErrorKind::kInvalidBox;
  e.answer_index = index;
  e.message = std::move(message);
  return e;
}

// Reads "bbox_2d"/"point_2d" coordinates; accepts JSON integers and decimals.
bool read_number(const nlohmann::json& j, double& out) {
  if (j.is_number_integer()) {
    out = static_cast<double>(j.get<std::int64_t>());
    return true;
  }
  if (j.is_number_unsigned()) {
    out = static_cast<double>(j.get<std::uint64_t>());
    return true;
  }
  if (j.is_number_float()) {
    out = j.get<double>();
    return true;
  }
  return false;
}

std::variant<std::vector<ObjectAnswer>, ParseError> parse_answer_payload(std::string_view raw) {
  nlohmann::json doc = nlohmann::json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) return malformed_json("answer payload is not valid JSON");
  if (!doc.is_array()) return malformed_json("answer payload must be a JSON array");

  std::vector<ObjectAnswer> answers;
  answers.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const nlohmann::json& item = doc[i];
    int idx = static_cast<int>(i);
    if (!item.is_object())
      return malformed_json("answer element " + std::to_string(i) + " is not an object");
    if (!item.contains("bbox_2d") || !item.contains("point_2d"))
      return malformed_json("answer element " + std::to_string(i) +
                            " lacks bbox_2d or point_2d");
    const nlohmann::json& box = item["bbox_2d"];
    const nlohmann::json& point = item["point_2d"];
    if (!box.is_array() || box.size() != 4)
      return malformed_json("bbox_2d of element " + std::to_string(i) +
                            " must be an array of 4 numbers");
    if (!point.is_array() || point.size() != 2)
      return malformed_json("point_2d of element " + std::to_string(i) +
                            " must be an array of 2 numbers");

    ObjectAnswer a;
    double* box_fields[4] = {&a.x1, &a.y1, &a.x2, &a.y2};
    for (int k = 0; k < 4; ++k) {
      if (!read_number(box[k], *box_fields[k]))
        return malformed_json("bbox_2d of element " + std::to_string(i) + " has a non-number");
    }
    if (!read_number(point[0], a.px) || !read_number(point[1], a.py))
      return malformed_json("point_2d of element " + std::to_string(i) + " has a non-number");

    for (double v : {a.x1, a.y1, a.x2, a.y2, a.px, a.py}) {
      if (!std::isfinite(v)) return invalid_box(idx, "non-finite coordinate");
      if (v < 0.0) return invalid_box(idx, "negative coordinate");
    }
    if (!(a.x1 < a.x2) || !(a.y1 < a.y2))
      return invalid_box(idx, "degenerate box: requires x1 < x2 and y1 < y2");
    answers.push_back(a);
  }
  return answers;
}

std::string render_json_number(double v) {
  nlohmann::json j;
  if (std::floor(v) == v && std::abs(v) < 9.007199254740992e15) {
    j = static_cast<std::int64_t>(v);
  } else {
    j = v;
  }
  return j.dump();
}

}  // namespace

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kMissingTag: return "MissingTag";
    case ParseErrorKind::kTagOrderViolation: return "TagOrderViolation";
    case ParseErrorKind::kMalformedJson: return "MalformedJson";
    case ParseErrorKind::kInvalidBox: return "InvalidBox";
  }
  return "UnknownParseError";
}

ParseResult parse_response(std::string_view text, PromptMode mode) {
  const bool wants_description = (mode == PromptMode::kFirstPass);

  TagHit think_open{kThinkOpen, find_all(text, kThinkOpen)};
  TagHit think_close{kThinkClose, find_all(text, kThinkClose)};
  TagHit desc_open{kDescriptionOpen, find_all(text, kDescriptionOpen)};
  TagHit desc_close{kDescriptionClose, find_all(text, kDescriptionClose)};
  TagHit answer_open{kAnswerOpen, find_all(text, kAnswerOpen)};
  TagHit answer_close{kAnswerClose, find_all(text, kAnswerClose)};

  const TagHit* sequence_first[6] = {&think_open, &think_close, &desc_open,
                                     &desc_close, &answer_open, &answer_close};
  const TagHit* sequence_second[4] = {&think_open, &think_close, &answer_open, &answer_close};

  for (const TagHit* hit : sequence_first) {
    if (hit->positions.size() > 1)
      return order_violation("duplicated tag " + std::string(hit->literal));
  }
  if (!wants_description && (!desc_open.positions.empty() || !desc_close.positions.empty()))
    return order_violation("description tag is not allowed in a second-pass response");

  // Order among the tags that are present; a misplaced tag is reported before
  // any tag that is missing outright.
  {
    std::size_t prev_pos = 0;
    bool have_prev = false;
    auto check = [&](const TagHit& hit) -> std::optional<ParseError> {
      if (hit.positions.empty()) return std::nullopt;
      if (have_prev && hit.positions[0] < prev_pos)
        return order_violation("tag " + std::string(hit.literal) + " out of order");
      prev_pos = hit.positions[0];
      have_prev = true;
      return std::nullopt;
    };
    if (wants_description) {
      for (const TagHit* hit : sequence_first)
        if (auto err = check(*hit)) return *err;
    } else {
      for (const TagHit* hit : sequence_second)
        if (auto err = check(*hit)) return *err;
    }
  }

  if (wants_description) {
    for (const TagHit* hit : sequence_first)
      if (hit->positions.empty()) return missing_tag(hit->literal);
  } else {
    for (const TagHit* hit : sequence_second)
      if (hit->positions.empty()) return missing_tag(hit->literal);
  }

  Span think_span{think_open.positions[0] + kThinkOpen.size(), think_close.positions[0]};
  Span answer_span{answer_open.positions[0] + kAnswerOpen.size(), answer_close.positions[0]};
  std::optional<Span> desc_span;
  if (wants_description)
    desc_span = Span{desc_open.positions[0] + kDescriptionOpen.size(), desc_close.positions[0]};

  // Everything outside tag content must be whitespace.
  {
    std::vector<std::pair<std::size_t, std::size_t>> covered;
    covered.emplace_back(think_open.positions[0], think_close.positions[0] + kThinkClose.size());
    if (wants_description)
      covered.emplace_back(desc_open.positions[0],
                           desc_close.positions[0] + kDescriptionClose.size());
    covered.emplace_back(answer_open.positions[0],
                         answer_close.positions[0] + kAnswerClose.size());
    std::size_t cursor = 0;
    for (auto [begin, end] : covered) {
      if (!all_whitespace(text.substr(cursor, begin - cursor)))
        return order_violation("unexpected content outside tags");
      cursor = end;
    }
    if (!all_whitespace(text.substr(cursor)))
      return order_violation("unexpected content after closing tag");
  }

  StructuredResponse response;
  response.think = std::string(text.substr(think_span.begin, think_span.end - think_span.begin));
  response.answer_raw =
      std::string(text.substr(answer_span.begin, answer_span.end - answer_span.begin));
  response.spans.think = think_span;
  response.spans.answer = answer_span;
  if (desc_span) {
    response.description =
        std::string(text.substr(desc_span->begin, desc_span->end - desc_span->begin));
    response.spans.description = desc_span;
  }

  auto payload = parse_answer_payload(response.answer_raw);
  if (std::holds_alternative<ParseError>(payload)) return std::get<ParseError>(payload);
  response.answers = std::move(std::get<std::vector<ObjectAnswer>>(payload));
  return response;
}

std::string render_answers(const std::vector<ObjectAnswer>& answers) {
  std::string out = "[";
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const ObjectAnswer& a = answers[i];
    if (i > 0) out += ", ";
    out += "{\"bbox_2d\": [" + render_json_number(a.x1) + ", " + render_json_number(a.y1) +
           ", " + render_json_number(a.x2) + ", " + render_json_number(a.y2) +
           "], \"point_2d\": [" + render_json_number(a.px) + ", " + render_json_number(a.py) +
           "]}";
  }
  out += "]";
  return out;
}

std::string render_response(const StructuredResponse& response) {
  std::string out;
  out += kThinkOpen;
  out += response.think;
  out += kThinkClose;
  out += "\n";
  if (response.description) {
    out += kDescriptionOpen;
    out += *response.description;
    out += kDescriptionClose;
    out += "\n";
  }
  out += kAnswerOpen;
  out += render_answers(response.answers);
  out += kAnswerClose;
  return out;
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
  if (custom_) return custom_(text);
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (is_space_byte(c)) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else if (is_punct_byte(c)) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
      tokens.emplace_back(1, c);
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
  auto normalize = [](std::string_view fragment) -> std::string {
    std::string out;
    bool pending_space = false;
    for (char c : fragment) {
      if (is_space_byte(c)) {
        if (!out.empty()) pending_space = true;
      } else {
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
      }
    }
    return out;
  };

  std::vector<std::string> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    bool terminal = (c == '.' || c == '!' || c == '?');
    bool boundary = terminal && (i + 1 == text.size() || is_space_byte(text[i + 1]));
    if (boundary) {
      std::string sentence = normalize(text.substr(start, i - start));
      if (!sentence.empty()) sentences.push_back(std::move(sentence));
      start = i + 1;
    }
  }
  if (start < text.size()) {
    std::string sentence = normalize(text.substr(start));
    if (!sentence.empty()) sentences.push_back(std::move(sentence));
  }
  return sentences;
}

const std::string kFirstPassPromptTemplate =
    "Please find \"{Question}\" with bboxs and points.\n"
    "Compare the difference between object(s) and find the most closely matched object(s).\n"
    "Output the thinking process in <think> </think>, the explicit referring description for "
    "object localization in <description> </description>, and final answer in <answer> "
    "</answer> tags.\n"
    "Output the bbox(es) and point(s) inside the interested object(s) in JSON format.\n"
    "i.e., <think> thinking process here </think>\n"
    "<description> referring description here </description>\n"
    "<answer>[{\"bbox_2d\": [10,100,200,210], \"point_2d\": [30,110]}, "
    "{\"bbox_2d\": [225,296,706,786], \"point_2d\": [302,410]}]</answer>";

const std::string kSecondPassPromptTemplate =
    "Please find \"{Question}\" with bboxs and points.\n"
    "Compare the difference between object(s) and find the most closely matched object(s).\n"
    "Output the thinking process in <think> </think> and final answer in <answer> </answer> "
    "tags.\n"
    "Output the bbox(es) and point(s) inside the interested object(s) in JSON format.\n"
    "i.e., <think> thinking process here </think>\n"
    "<answer>[{\"bbox_2d\": [10,100,200,210], \"point_2d\": [30,110]}]</answer>";

std::string render_prompt(const std::string& prompt_template, std::string_view question) {
  const std::string slot = "{Question}";
  std::string out = prompt_template;
  std::size_t pos = out.find(slot);
  if (pos != std::string::npos) out.replace(pos, slot.size(), question);
  return out;
}

std::optional<std::string> extract_question(std::string_view prompt) {
  std::size_t open = prompt.find('"');
  if (open == std::string_view::npos) return std::nullopt;
  std::size_t close = prompt.find('"', open + 1);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(prompt.substr(open + 1, close - open - 1));
}

}  // namespace segreward
