#include "pathcal/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <regex>

#include "pathcal/types.hpp"

namespace pathcal {

using nlohmann::json;

std::string_view to_string(ExtractionMethod method) {
  switch (method) {
    case ExtractionMethod::kBoxed:
      return "boxed";
    case ExtractionMethod::kTailNumeric:
      return "tail_numeric";
    case ExtractionMethod::kCuePhrase:
      return "cue_phrase";
    case ExtractionMethod::kNone:
      return "none";
  }
  return "none";
}

ExtractionMethod parse_extraction_method(std::string_view text) {
  if (text == "boxed") return ExtractionMethod::kBoxed;
  if (text == "tail_numeric") return ExtractionMethod::kTailNumeric;
  if (text == "cue_phrase") return ExtractionMethod::kCuePhrase;
  if (text == "none") return ExtractionMethod::kNone;
  throw FormatError("unknown extraction method '" + std::string(text) + "'");
}

namespace {

std::string trim(std::string_view s) {
  auto is_ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Content of the balanced group opened at `open` (index of '{'), or nullopt.
std::optional<std::string_view> braced(std::string_view text, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}') {
      if (--depth == 0) return text.substr(open + 1, i - open - 1);
    }
  }
  return std::nullopt;
}

std::optional<std::string> last_boxed(std::string_view trace) {
  constexpr std::string_view kBoxed = "\\boxed{";
  std::size_t pos = trace.rfind(kBoxed);
  while (pos != std::string_view::npos) {
    if (auto content = braced(trace, pos + kBoxed.size() - 1)) return trim(*content);
    if (pos == 0) break;
    pos = trace.rfind(kBoxed, pos - 1);
  }
  return std::nullopt;
}

const std::regex& numeric_regex() {
  static const std::regex re(
      R"(\\[dt]?frac\{\s*-?\d+\s*\}\{\s*-?\d+\s*\}|-?\d+(?:,\d{3})*(?:\.\d+)?(?:\s*/\s*\d+(?:\.\d+)?)?)");
  return re;
}

struct Match {
  std::size_t pos;
  std::string text;
};

std::vector<Match> numeric_matches(std::string_view text) {
  std::vector<Match> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), numeric_regex());
       it != std::sregex_iterator(); ++it) {
    out.push_back({static_cast<std::size_t>(it->position()), it->str()});
  }
  return out;
}

constexpr std::array<std::string_view, 4> kCues = {"the answer is", "final answer", "</think>",
                                                   "therefore"};

}  // namespace

ExtractionResult extract_answer(std::string_view trace) {
  try {
    if (auto boxed = last_boxed(trace)) return {std::move(*boxed), ExtractionMethod::kBoxed};

    const std::string_view tail =
        trace.size() > kTailWindow ? trace.substr(trace.size() - kTailWindow) : trace;
    const auto matches = numeric_matches(tail);
    if (matches.empty()) return {};

    const std::string tail_lower = lower(tail);
    std::optional<std::size_t> cue_end;
    for (auto cue : kCues) {
      auto pos = tail_lower.rfind(cue);
      if (pos != std::string::npos && (!cue_end || pos + cue.size() > *cue_end)) {
        cue_end = pos + cue.size();
      }
    }
    if (cue_end) {
      for (const auto& m : matches) {
        if (m.pos >= *cue_end) return {trim(m.text), ExtractionMethod::kCuePhrase};
      }
    }
    return {trim(matches.back().text), ExtractionMethod::kTailNumeric};
  } catch (const std::exception&) {
    return {};
  }
}

namespace {

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

// Decimal text (digits with optional '.') → exact num/den when it fits.
std::optional<std::pair<std::int64_t, std::int64_t>> decimal_to_rational(std::string_view text) {
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool after_point = false;
  for (char c : text) {
    if (c == '.') {
      after_point = true;
      continue;
    }
    const int d = c - '0';
    if (num > (INT64_MAX - d) / 10) return std::nullopt;
    num = num * 10 + d;
    if (after_point) {
      if (den > INT64_MAX / 10) return std::nullopt;
      den *= 10;
    }
  }
  return std::make_pair(num, den);
}

std::optional<NumericValue> make_value(bool negative, std::string_view num_text,
                                       std::string_view den_text) {
  NumericValue v;
  const double num_d = std::stod(std::string(num_text));
  const double den_d = den_text.empty() ? 1.0 : std::stod(std::string(den_text));
  if (den_d == 0.0) return std::nullopt;
  v.value = (negative ? -num_d : num_d) / den_d;
  auto n = decimal_to_rational(num_text);
  auto d = den_text.empty() ? std::optional(std::make_pair<std::int64_t, std::int64_t>(1, 1))
                            : decimal_to_rational(den_text);
  if (n && d) {
    // (a/b) / (c/e) = (a*e) / (b*c)
    __int128 top = static_cast<__int128>(n->first) * d->second;
    __int128 bottom = static_cast<__int128>(n->second) * d->first;
    if (bottom == 0) return std::nullopt;
    __int128 a = top < 0 ? -top : top;
    __int128 b = bottom;
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    const __int128 g = a == 0 ? 1 : a;
    top /= g;
    bottom /= g;
    if (top <= INT64_MAX && bottom <= INT64_MAX) {
      v.exact = true;
      v.num = static_cast<std::int64_t>(top) * (negative ? -1 : 1);
      v.den = static_cast<std::int64_t>(bottom);
      if (v.num == 0) v.den = 1;
    }
  }
  return v;
}

}  // namespace

std::optional<NumericValue> parse_numeric(std::string_view raw) {
  std::string s = trim(raw);
  while (s.size() >= 2 && s.front() == '$' && s.back() == '$') s = trim(s.substr(1, s.size() - 2));
  for (std::string_view noise : {"\\!", "\\,", "\\;", "\\ ", "\\left", "\\right", "{,}"}) {
    s = replace_all(std::move(s), noise, noise == "\\ " ? " " : "");
  }
  s = trim(s);
  while (!s.empty() && (s.back() == '.' || s.back() == '$')) s.pop_back();

  static const std::regex number_re(
      R"(^([+-])?\s*(?:\\[dt]?frac\{\s*(\d+(?:\.\d+)?)\s*\}\{\s*(\d+(?:\.\d+)?)\s*\}|(\d+(?:,\d{3})*(?:\.\d+)?|\.\d+)(?:\s*/\s*(\d+(?:\.\d+)?))?)(.*)$)");
  static const std::regex unit_re(R"(^\s*(?:\\text\{[^{}]*\}|\\mbox\{[^{}]*\}|\^\\circ|\^\{\\circ\}|\\%|%|\\?[A-Za-z]+|\s)*$)");
  std::smatch m;
  if (!std::regex_match(s, m, number_re)) return std::nullopt;
  if (!std::regex_match(m[6].first, m[6].second, unit_re)) return std::nullopt;
  const bool negative = m[1].matched && m[1].str() == "-";
  try {
    if (m[2].matched) return make_value(negative, m[2].str(), m[3].str());
    std::string whole = replace_all(m[4].str(), ",", "");
    if (whole.front() == '.') whole.insert(whole.begin(), '0');
    return make_value(negative, whole, m[5].matched ? m[5].str() : "");
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

AnswerMode infer_answer_mode(std::string_view gold) {
  return parse_numeric(gold) ? AnswerMode::kNumeric : AnswerMode::kShortString;
}

std::string normalize_answer(std::string_view raw, AnswerMode mode) {
  if (mode == AnswerMode::kShortString) {
    std::string out;
    bool pending_space = false;
    for (char c : raw) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
  }
  auto v = parse_numeric(raw);
  if (!v) throw ParseFailure("not a numeric answer: '" + std::string(raw) + "'");
  if (v->exact) {
    return v->den == 1 ? std::to_string(v->num)
                       : std::to_string(v->num) + "/" + std::to_string(v->den);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v->value);
  return buf;
}

bool answers_match(std::string_view predicted, std::string_view gold, AnswerMode mode) {
  if (mode == AnswerMode::kShortString) {
    return normalize_answer(predicted, mode) == normalize_answer(gold, mode);
  }
  auto a = parse_numeric(predicted);
  auto b = parse_numeric(gold);
  if (!a || !b) return false;
  if (a->exact && b->exact) return a->num == b->num && a->den == b->den;
  const double scale = std::max(std::fabs(a->value), std::fabs(b->value));
  return std::fabs(a->value - b->value) <= 1e-6 * scale;
}

json to_json(const EvalRecord& r) {
  json predicted = {{"method", to_string(r.predicted.method)}};
  predicted["answer"] = r.predicted.answer ? json(*r.predicted.answer) : json(nullptr);
  return {{"problem_id", r.problem_id}, {"gold", r.gold},
          {"predicted", predicted},     {"correct", r.correct},
          {"gen_tokens", r.gen_tokens}, {"think_closed", r.think_closed},
          {"hit_length_limit", r.hit_length_limit}};
}

EvalRecord eval_record_from_json(const json& j) {
  try {
    EvalRecord r;
    r.problem_id = j.at("problem_id").get<std::string>();
    r.gold = j.at("gold").get<std::string>();
    const auto& p = j.at("predicted");
    r.predicted.method = parse_extraction_method(p.at("method").get<std::string>());
    if (!p.at("answer").is_null()) r.predicted.answer = p.at("answer").get<std::string>();
    r.correct = j.at("correct").get<bool>();
    r.gen_tokens = j.at("gen_tokens").get<std::size_t>();
    r.think_closed = j.value("think_closed", false);
    r.hit_length_limit = j.value("hit_length_limit", false);
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad eval record: ") + e.what());
  }
}

EvalRecord judge_trace(std::string problem_id, std::string_view trace, std::string gold,
                       AnswerMode mode, std::size_t gen_tokens, bool think_closed,
                       bool hit_length_limit) {
  EvalRecord r;
  r.problem_id = std::move(problem_id);
  r.predicted = extract_answer(trace);
  r.correct = r.predicted.answer && answers_match(*r.predicted.answer, gold, mode);
  r.gold = std::move(gold);
  r.gen_tokens = gen_tokens;
  r.think_closed = think_closed;
  r.hit_length_limit = hit_length_limit;
  return r;
}

ScoreSummary score(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw EmptyInput("score: no records");
  ScoreSummary s;
  s.n = records.size();
  double correct = 0, length = 0, boxed = 0, closed = 0, hit = 0;
  for (const auto& r : records) {
    correct += r.correct ? 1 : 0;
    length += static_cast<double>(r.gen_tokens);
    boxed += r.predicted.method == ExtractionMethod::kBoxed ? 1 : 0;
    closed += r.think_closed ? 1 : 0;
    hit += r.hit_length_limit ? 1 : 0;
  }
  const double n = static_cast<double>(s.n);
  s.accuracy = correct / n;
  s.mean_length = length / n;
  s.boxed_rate = boxed / n;
  s.closed_think_rate = closed / n;
  s.length_hit_rate = hit / n;
  return s;
}

std::string summary_csv_header() {
  return "method,dataset,accuracy,mean_length,boxed_rate,closed_think_rate,length_hit_rate";
}

std::string summary_csv_row(std::string_view method, std::string_view dataset,
                            const ScoreSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), ",%.6f,%.3f,%.6f,%.6f,%.6f", s.accuracy, s.mean_length,
                s.boxed_rate, s.closed_think_rate, s.length_hit_rate);
  return std::string(method) + "," + std::string(dataset) + buf;
}

}  // namespace pathcal
