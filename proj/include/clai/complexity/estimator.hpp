#pragma once

#include <cstdint>
#include <string_view>

#include "clai/core/types.hpp"

// Offline estimate of a query's intrinsic complexity: lexical structure
// counts, a linear 1..10 score, a three-way tier and the token budget for
// that tier.
namespace clai::complexity {

struct StructuralFeatures {
  std::int64_t entity_count = 0;
  std::int64_t logical_op_count = 0;
  std::int64_t arithmetic_op_count = 0;
  std::int64_t numeric_term_count = 0;
  // Count of subordinating markers. A stand-in for reasoning depth.
  std::int64_t clause_depth = 0;

  bool operator==(const StructuralFeatures&) const = default;
};

struct FeatureWeights {
  double entity = 0.5;
  double logical = 1.0;
  double arithmetic = 1.0;
  double numeric = 0.5;
  double depth = 1.5;
};

enum class Tier { Low, Medium, High };

struct BudgetPolicy {
  int low_max = 3;
  int med_max = 7;
  std::int64_t low_budget = 50;
  std::int64_t medium_budget = 200;
  std::int64_t high_budget = 500;
  double slack_factor = 1.2;
};

ValidationResult validate_policy(const BudgetPolicy& policy);

// Throws InvalidQuery on empty or whitespace-only text.
//
// Lexicons (case-insensitive, whole words):
//   logical     and, or, then, if, not, versus, except
//   arithmetic  sum, average, percentage, ratio, total, difference, compare
//               (plus a plural "s"), the symbols + * ^ % anywhere, and
//               '-' or '/' unless joining two letters
//   numeric     digit runs (1,000 / 3.5 / 3rd count once), one..twenty,
//               first..twentieth, between, through, range
//   depth       that, which, when, where, because, given
// Entities are maximal runs of capitalized words (first letter upper-case,
// rest letters/digits/'.-'), not counting the first word of a sentence.
StructuralFeatures analyze_structure(std::string_view text);

// clamp(round(1 + sum(weight * count)), 1, 10). Negative weights are a
// precondition violation.
int score_complexity(const StructuralFeatures& f, const FeatureWeights& weights = {});

// Throws InvalidScore outside [1, 10].
Tier classify_tier(int score, const BudgetPolicy& policy = {});

std::int64_t allocate_budget(int score, const BudgetPolicy& policy = {});

// Heuristic plan used when no model assessment is available: the query as
// its single sub-question, the local score and the policy budget.
CognitivePlan heuristic_plan(std::string_view query_text, const BudgetPolicy& policy = {},
                             const FeatureWeights& weights = {});

std::string_view to_string(Tier t) noexcept;

}  // namespace clai::complexity
