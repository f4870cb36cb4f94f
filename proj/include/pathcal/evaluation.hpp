#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pathcal/types.hpp"

namespace pathcal {

enum class ExtractionMethod { kBoxed, kTailNumeric, kCuePhrase, kNone };
std::string_view to_string(ExtractionMethod method);
ExtractionMethod parse_extraction_method(std::string_view text);

struct ExtractionResult {
  std::optional<std::string> answer;  // absent iff method == kNone
  ExtractionMethod method = ExtractionMethod::kNone;
};

// Characters at the end of a trace searched by the fallback rules.
inline constexpr std::size_t kTailWindow = 500;

// Last balanced \boxed{...} anywhere in the trace; otherwise a numeric or
// fractional expression from the last kTailWindow characters: the first one
// after the last cue phrase ("the answer is", "final answer", "</think>",
// "therefore"; case-insensitive) if present, else the last one in the tail.
// Never throws.
ExtractionResult extract_answer(std::string_view trace);

// Exact rational when the text is an integer, decimal, or fraction that fits
// in 64 bits; otherwise only the double value is kept.
struct NumericValue {
  bool exact = false;
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value = 0.0;
};

// Parses a number, decimal, a/b or \frac{a}{b} with optional sign, LaTeX
// spacing, thousands separators and trailing units. Nullopt on failure.
std::optional<NumericValue> parse_numeric(std::string_view raw);

enum class AnswerMode { kNumeric, kShortString };
AnswerMode infer_answer_mode(std::string_view gold);

// Numeric: canonical p/q (or p) in lowest terms, or %.15g for inexact values.
// Short string: lower-cased with whitespace collapsed. Throws ParseFailure.
std::string normalize_answer(std::string_view raw, AnswerMode mode);

// Numeric answers compare exactly when both are rational, otherwise with
// relative tolerance 1e-6. Parse failures compare unequal.
bool answers_match(std::string_view predicted, std::string_view gold, AnswerMode mode);

struct EvalRecord {
  std::string problem_id;
  std::string gold;
  ExtractionResult predicted;
  bool correct = false;
  std::size_t gen_tokens = 0;
  bool think_closed = false;
  bool hit_length_limit = false;
};

nlohmann::json to_json(const EvalRecord& record);
EvalRecord eval_record_from_json(const nlohmann::json& j);

// Extracts from `trace` and judges against `gold`.
EvalRecord judge_trace(std::string problem_id, std::string_view trace, std::string gold,
                       AnswerMode mode, std::size_t gen_tokens, bool think_closed,
                       bool hit_length_limit);

struct ScoreSummary {
  std::size_t n = 0;
  double accuracy = 0.0;
  double mean_length = 0.0;
  double boxed_rate = 0.0;
  double closed_think_rate = 0.0;
  double length_hit_rate = 0.0;
};

// Throws EmptyInput on an empty set.
ScoreSummary score(const std::vector<EvalRecord>& records);

std::string summary_csv_header();
std::string summary_csv_row(std::string_view method, std::string_view dataset,
                            const ScoreSummary& s);

}  // namespace pathcal
