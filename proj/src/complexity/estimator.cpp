#include "clai/complexity/estimator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <string>

#include "clai/core/error.hpp"

namespace clai::complexity {
namespace {

constexpr std::array kLogical = {"and", "or", "then", "if", "not", "versus", "except"};
constexpr std::array kArithmeticWords = {"sum", "average", "percentage", "ratio", "total", "difference", "compare"};
constexpr std::array kNumberWords = {"one",     "two",       "three",    "four",     "five",    "six",     "seven",
                                     "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
                                     "fourteen", "fifteen",  "sixteen",  "seventeen", "eighteen", "nineteen",
                                     "twenty"};
constexpr std::array kOrdinalWords = {"first",       "second",     "third",       "fourth",     "fifth",
                                      "sixth",       "seventh",    "eighth",      "ninth",      "tenth",
                                      "eleventh",    "twelfth",    "thirteenth",  "fourteenth", "fifteenth",
                                      "sixteenth",   "seventeenth", "eighteenth", "nineteenth", "twentieth"};
constexpr std::array kRangeMarkers = {"between", "through", "range"};
constexpr std::array kSubordinators = {"that", "which", "when", "where", "because", "given"};

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_alpha(char c) { return is_upper(c) || is_lower(c); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }
// Bytes of multi-byte UTF-8 sequences stay inside words so they never split
// an ASCII word into lexicon hits.
bool is_word_byte(char c) { return is_alpha(c) || static_cast<unsigned char>(c) >= 0x80; }

template <std::size_t N>
bool in(const std::array<const char*, N>& lexicon, std::string_view word) {
  return std::any_of(lexicon.begin(), lexicon.end(), [&](const char* w) { return word == w; });
}

bool is_arithmetic_word(std::string_view w) {
  if (in(kArithmeticWords, w)) return true;
  return w.size() > 1 && w.back() == 's' && in(kArithmeticWords, w.substr(0, w.size() - 1));
}

std::int64_t count_entities(std::string_view text) {
  std::int64_t runs = 0;
  bool in_run = false;
  bool sentence_start = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !is_space(text[end])) ++end;
    std::string_view chunk = text.substr(pos, end - pos);
    pos = end;

    std::size_t b = 0, e = chunk.size();
    while (b < e && !is_alpha(chunk[b]) && !is_digit(chunk[b])) ++b;
    while (e > b && !is_alpha(chunk[e - 1]) && !is_digit(chunk[e - 1])) --e;
    const std::string_view core = chunk.substr(b, e - b);

    bool capitalized = !core.empty() && is_upper(core.front()) && core != "I";
    for (std::size_t i = 1; capitalized && i < core.size(); ++i) {
      const char c = core[i];
      capitalized = is_alpha(c) || is_digit(c) || c == '.' || c == '\'' || c == '-';
    }

    if (capitalized && !sentence_start) {
      if (!in_run) ++runs;
      in_run = true;
    } else {
      in_run = false;
    }

    std::size_t last = chunk.size();
    while (last > 0 && (chunk[last - 1] == '"' || chunk[last - 1] == '\'' || chunk[last - 1] == ')')) --last;
    sentence_start = last > 0 && (chunk[last - 1] == '.' || chunk[last - 1] == '?' || chunk[last - 1] == '!');
  }
  return runs;
}

}  // namespace

StructuralFeatures analyze_structure(std::string_view text) {
  if (trim(text).empty()) fail(ErrorKind::InvalidQuery, "query text is empty");

  StructuralFeatures f;
  f.entity_count = count_entities(text);

  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (is_digit(c)) {
      std::size_t j = i + 1;
      while (j < n && (is_digit(text[j]) || ((text[j] == '.' || text[j] == ',') && j + 1 < n && is_digit(text[j + 1])))) {
        ++j;
      }
      if (j + 1 < n) {
        const std::string suffix{static_cast<char>(std::tolower(static_cast<unsigned char>(text[j]))),
                                 static_cast<char>(std::tolower(static_cast<unsigned char>(text[j + 1])))};
        const bool ordinal = suffix == "st" || suffix == "nd" || suffix == "rd" || suffix == "th";
        if (ordinal && (j + 2 >= n || !is_word_byte(text[j + 2]))) j += 2;
      }
      ++f.numeric_term_count;
      i = j;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t j = i;
      std::string word;
      while (j < n && is_word_byte(text[j])) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[j]))));
        ++j;
      }
      if (in(kLogical, word)) ++f.logical_op_count;
      if (is_arithmetic_word(word)) ++f.arithmetic_op_count;
      if (in(kNumberWords, word) || in(kOrdinalWords, word) || in(kRangeMarkers, word)) ++f.numeric_term_count;
      if (in(kSubordinators, word)) ++f.clause_depth;
      i = j;
      continue;
    }
    if (c == '+' || c == '*' || c == '^' || c == '%') {
      ++f.arithmetic_op_count;
    } else if (c == '-' || c == '/') {
      const bool joins_letters = i > 0 && i + 1 < n && is_alpha(text[i - 1]) && is_alpha(text[i + 1]);
      if (!joins_letters) ++f.arithmetic_op_count;
    }
    ++i;
  }
  return f;
}

int score_complexity(const StructuralFeatures& f, const FeatureWeights& w) {
  for (double x : {w.entity, w.logical, w.arithmetic, w.numeric, w.depth}) {
    require(std::isfinite(x) && x >= 0.0, "feature weights must be finite and non-negative");
  }
  const double raw = 1.0 + w.entity * static_cast<double>(f.entity_count) +
                     w.logical * static_cast<double>(f.logical_op_count) +
                     w.arithmetic * static_cast<double>(f.arithmetic_op_count) +
                     w.numeric * static_cast<double>(f.numeric_term_count) +
                     w.depth * static_cast<double>(f.clause_depth);
  const double clamped = std::clamp(std::round(raw), 1.0, 10.0);
  return static_cast<int>(clamped);
}

ValidationResult validate_policy(const BudgetPolicy& p) {
  ValidationResult r;
  if (!(1 <= p.low_max && p.low_max < p.med_max && p.med_max < 10)) {
    r.violations.push_back(fmt::format("tier boundaries must satisfy 1 <= low_max < med_max < 10 (got {}, {})",
                                       p.low_max, p.med_max));
  }
  if (!(0 < p.low_budget && p.low_budget < p.medium_budget && p.medium_budget < p.high_budget)) {
    r.violations.push_back(fmt::format("tier budgets must be positive and strictly increasing (got {}, {}, {})",
                                       p.low_budget, p.medium_budget, p.high_budget));
  }
  if (!(p.slack_factor >= 1.0)) r.violations.emplace_back("slack_factor must be >= 1");
  return r;
}

Tier classify_tier(int score, const BudgetPolicy& policy) {
  if (score < 1 || score > 10) fail(ErrorKind::InvalidScore, fmt::format("score {} outside [1,10]", score));
  if (score <= policy.low_max) return Tier::Low;
  if (score <= policy.med_max) return Tier::Medium;
  return Tier::High;
}

std::int64_t allocate_budget(int score, const BudgetPolicy& policy) {
  switch (classify_tier(score, policy)) {
    case Tier::Low: return policy.low_budget;
    case Tier::Medium: return policy.medium_budget;
    case Tier::High: return policy.high_budget;
  }
  return policy.high_budget;
}

CognitivePlan heuristic_plan(std::string_view query_text, const BudgetPolicy& policy, const FeatureWeights& weights) {
  const int score = score_complexity(analyze_structure(query_text), weights);
  return CognitivePlan{{trim(query_text)}, score, allocate_budget(score, policy)};
}

std::string_view to_string(Tier t) noexcept {
  switch (t) {
    case Tier::Low: return "low";
    case Tier::Medium: return "medium";
    case Tier::High: return "high";
  }
  return "unknown";
}

}  // namespace clai::complexity
