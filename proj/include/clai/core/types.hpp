#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Shared domain model. Everything here is a plain value type: build it,
// validate it, serialize it. No I/O and no model calls.
namespace clai {

struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> source;

  bool operator==(const Document&) const = default;
};

struct Query {
  std::string id;
  std::string text;
  std::optional<std::vector<Document>> documents;

  bool operator==(const Query&) const = default;
};

// Stage-1 output: sub-questions, a 1..10 complexity score and the reasoning
// token budget proposed for Stage 3.
struct CognitivePlan {
  std::vector<std::string> sub_questions;
  int complexity_score = 1;
  std::int64_t reasoning_token_budget = 1;

  bool operator==(const CognitivePlan&) const = default;
};

// Extracted facts after context pruning. source_doc_ids[i] lists the
// documents fact i was found in (empty when provenance is unknown).
struct PrunedContext {
  std::vector<std::string> facts;
  std::vector<std::vector<std::string>> source_doc_ids;
  std::int64_t input_token_count = 0;
  std::int64_t output_token_count = 0;

  bool operator==(const PrunedContext&) const = default;
};

struct ReasoningStep {
  int step_index = 1;
  std::string text;

  bool operator==(const ReasoningStep&) const = default;
};

struct SelfCheck {
  bool all_subquestions_addressed = false;
  bool answer_consistent = false;

  bool operator==(const SelfCheck&) const = default;
};

struct ReasoningOutput {
  std::vector<ReasoningStep> steps;
  std::string final_answer;
  std::optional<SelfCheck> self_check;
  bool truncated = false;
  // Set when the final answer came from the last-line fallback rather than
  // the "**Final Answer:**" section.
  bool degraded = false;

  bool operator==(const ReasoningOutput&) const = default;
};

enum class UsageSource { backend_reported, estimated };

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  UsageSource source = UsageSource::backend_reported;

  std::int64_t total() const noexcept { return prompt_tokens + completion_tokens; }
  bool operator==(const TokenUsage&) const = default;
};

// Component-wise sum. The result is marked estimated when any non-empty part
// was estimated.
TokenUsage operator+(const TokenUsage& a, const TokenUsage& b);

enum class Stage { stage1_plan, stage2_prune, stage3_reason, correction, single_pass };

enum class PipelineMode { clai_prompt, clai_tune, standard_cot };

struct StageRecord {
  Stage stage = Stage::stage1_plan;
  std::string rendered_prompt;
  std::string raw_response;
  TokenUsage usage;
  std::int64_t latency_ms = 0;
  // Generation cap sent with the request; absent means uncapped.
  std::optional<std::int64_t> max_tokens;

  bool operator==(const StageRecord&) const = default;
};

struct PlanStep {
  int step = 1;
  std::string sub_problem;

  bool operator==(const PlanStep&) const = default;
};

// High-complexity output format: an analysis plus ordered sub-problems.
struct DecomposedPlan {
  std::string analysis;
  std::vector<PlanStep> plan;

  bool operator==(const DecomposedPlan&) const = default;
};

struct PipelineTranscript {
  std::string query_id;
  PipelineMode mode = PipelineMode::clai_prompt;
  std::vector<StageRecord> stages;
  TokenUsage total_usage;
  std::int64_t wall_time_ms = 0;

  std::string final_answer;
  std::optional<CognitivePlan> plan;
  std::optional<PrunedContext> pruned_context;
  std::optional<ReasoningOutput> reasoning;
  std::optional<DecomposedPlan> decomposed_plan;
  bool degraded = false;
  // Human-readable notes on fallbacks taken during the run.
  std::vector<std::string> issues;

  bool operator==(const PipelineTranscript&) const = default;
};

// Validation helpers return every violated invariant, not only the first.
struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
  explicit operator bool() const noexcept { return ok(); }
};

ValidationResult validate_query(const Query& q);
ValidationResult validate_document(const Document& d);
ValidationResult validate_plan(const CognitivePlan& plan);
ValidationResult validate_pruned_context(const PrunedContext& ctx);
ValidationResult validate_reasoning(const ReasoningOutput& out);
ValidationResult validate_usage(const TokenUsage& usage);
ValidationResult validate_stage_record(const StageRecord& record);
ValidationResult validate_transcript(const PipelineTranscript& t);
ValidationResult validate_decomposed_plan(const DecomposedPlan& plan);

// Component-wise sum of the stage usages.
TokenUsage sum_usage(const std::vector<StageRecord>& stages);

std::string_view to_string(UsageSource s) noexcept;
std::string_view to_string(Stage s) noexcept;
std::string_view to_string(PipelineMode m) noexcept;

std::string trim(std::string_view s);

}  // namespace clai
