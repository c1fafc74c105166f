#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace segreward {

/// One predicted or ground-truth object: a pixel-space bounding box
/// [x1, y1, x2, y2] plus an interior point [x, y].
struct ObjectAnswer {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
  double px = 0.0, py = 0.0;

  friend bool operator==(const ObjectAnswer&, const ObjectAnswer&) = default;
};

enum class PromptMode { kFirstPass, kSecondPass };

/// Byte range [begin, end) into the source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

struct TagSpans {
  Span think;
  std::optional<Span> description;
  Span answer;
};

/// Parsed think/description/answer triple. Equality is semantic: it compares
/// the reasoning text, the description, and the answer list, but not the raw
/// answer payload or the byte spans (rendering canonicalizes those).
struct StructuredResponse {
  std::string think;
  std::optional<std::string> description;
  std::string answer_raw;
  std::vector<ObjectAnswer> answers;
  TagSpans spans;

  friend bool operator==(const StructuredResponse& a, const StructuredResponse& b) {
    return a.think == b.think && a.description == b.description && a.answers == b.answers;
  }
};

enum class ParseErrorKind { kMissingTag, kTagOrderViolation, kMalformedJson, kInvalidBox };

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::kMissingTag;
  std::string tag;       // offending tag literal, for kMissingTag
  int answer_index = -1; // offending answer element, for kInvalidBox
  std::string message;
};

const char* to_string(ParseErrorKind kind);

/// Total-function parse result: exactly one of response / error.
class ParseResult {
 public:
  ParseResult(StructuredResponse response) : v_(std::move(response)) {}
  ParseResult(ParseError error) : v_(std::move(error)) {}

  bool ok() const { return std::holds_alternative<StructuredResponse>(v_); }
  const StructuredResponse& value() const { return std::get<StructuredResponse>(v_); }
  const ParseError& error() const { return std::get<ParseError>(v_); }

 private:
  std::variant<StructuredResponse, ParseError> v_;
};

/// Parses a tagged model response.
///
/// Grammar (whitespace between tags is tolerated, anything else outside the
/// tags is not):
///   first pass:  <think>R</think> <description>D</description> <answer>A</answer>
///   second pass: <think>R</think> <answer>A</answer>
///
/// A is a JSON array of {"bbox_2d": [x1,y1,x2,y2], "point_2d": [x,y]} objects.
/// Tag matching is exact and case-sensitive; duplicated, nested, misplaced or
/// mode-forbidden tags are TagOrderViolation. Structural JSON problems are
/// MalformedJson; negative, non-finite or degenerate coordinates in element i
/// are InvalidBox(i). Never throws on any input.
ParseResult parse_response(std::string_view text, PromptMode mode);

/// Canonical text for a parsed response; parse_response(render(r), mode)
/// yields a response equal to r.
std::string render_response(const StructuredResponse& response);

/// Canonical JSON array for an answer list (integral coordinates rendered as
/// JSON integers).
std::string render_answers(const std::vector<ObjectAnswer>& answers);

/// Deterministic token counting for the length rewards. The default splitter
/// separates on whitespace and treats every punctuation byte as a single
/// token; bytes >= 0x80 count as word characters, so it is UTF-8 safe.
class Tokenizer {
 public:
  using SplitFn = std::function<std::vector<std::string>(std::string_view)>;

  Tokenizer() = default;
  explicit Tokenizer(SplitFn custom) : custom_(std::move(custom)) {}

  std::vector<std::string> tokenize(std::string_view text) const;
  std::size_t count(std::string_view text) const { return tokenize(text).size(); }

 private:
  SplitFn custom_;
};

/// Splits on '.', '!' or '?' followed by whitespace or end of text. Sentences
/// are trimmed, internal whitespace runs collapse to single spaces, and empty
/// fragments are dropped.
std::vector<std::string> split_sentences(std::string_view text);

// Tag literals.
inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kDescriptionOpen = "<description>";
inline constexpr std::string_view kDescriptionClose = "</description>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

/// Prompt templates. "{Question}" is the substitution slot: the dataset query
/// in the first pass, the generated description in the second.
extern const std::string kFirstPassPromptTemplate;
extern const std::string kSecondPassPromptTemplate;

std::string render_prompt(const std::string& prompt_template, std::string_view question);

/// Extracts the quoted question slot from a rendered prompt.
std::optional<std::string> extract_question(std::string_view prompt);

}  // namespace segreward
