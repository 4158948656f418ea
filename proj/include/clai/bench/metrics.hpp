#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace clai::bench {

// Lower-cases, drops currency signs, commas, bold markers and trailing
// punctuation, and collapses whitespace.
std::string normalize_answer(std::string_view text);

// Parses a plain decimal number ("87", "-3.5", "1,000"). Anything else,
// including trailing words, yields nullopt.
std::optional<double> parse_number(std::string_view text);

// Priority: the text after a "Final Answer" header, else (numeric) the last
// number in the text, else the last non-empty line. For numeric tasks the
// header text is narrowed to its last number when it has one.
// Throws NoAnswer on empty input.
std::string extract_final_answer(std::string_view text, bool numeric = true);

// Equality after normalization; numbers compare within 1e-6 relative.
bool score_exact(std::string_view pred, std::string_view gold);

// Token-level F1 over whitespace tokens after normalization (multiset
// overlap). 0 when either side is empty.
double score_f1(std::string_view pred, std::string_view gold);

// 100 * (base - method) / base. Throws ZeroBaseline when base <= 0.
double token_reduction(double base_avg, double method_avg);

// input / pruned. Throws ZeroPruned when pruned <= 0.
double compression_ratio(double input_tokens, double pruned_tokens);

// Half-up rounding to one decimal, as printed in reports.
double round1(double x);

}  // namespace clai::bench
