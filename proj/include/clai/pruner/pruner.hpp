#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "clai/core/types.hpp"

// Extractive, model-free context pruning: keep the document sentences that
// lexically answer at least one sub-question.
namespace clai::pruner {

inline constexpr double kDefaultThreshold = 0.34;

// Splits after '.', '?' or '!' when followed by whitespace and an upper-case
// letter, and at every newline. Known abbreviations ("Dr.", "e.g.", ...) do
// not end a sentence. Sentences are trimmed; empty ones are dropped.
std::vector<std::string> split_sentences(std::string_view text);
std::vector<std::string> split_sentences(const Document& doc);

// Lower-cased alphanumeric runs minus stopwords, deduplicated.
std::vector<std::string> content_terms(std::string_view text);

// Max over sub-questions of |shared terms| / |sub-question terms|. A
// sub-question without content terms scores 0.
double score_relevance(std::string_view sentence, const std::vector<std::string>& sub_questions);

// Keeps sentences scoring >= threshold in document order. A sentence that
// occurs in several documents is kept once with all their ids. Token counts
// are estimate_tokens() over the space-joined documents and facts.
PrunedContext prune(const std::vector<Document>& docs, const CognitivePlan& plan,
                    double threshold = kDefaultThreshold);

}  // namespace clai::pruner
