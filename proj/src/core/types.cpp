#include "clai/core/types.hpp"

#include <fmt/format.h>

#include <unordered_set>

namespace clai {

TokenUsage operator+(const TokenUsage& a, const TokenUsage& b) {
  const bool estimated = (a.source == UsageSource::estimated && a.total() > 0) ||
                         (b.source == UsageSource::estimated && b.total() > 0);
  return TokenUsage{a.prompt_tokens + b.prompt_tokens, a.completion_tokens + b.completion_tokens,
                    estimated ? UsageSource::estimated : UsageSource::backend_reported};
}

std::string trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\v\f";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return std::string(s.substr(first, last - first + 1));
}

ValidationResult validate_document(const Document& d) {
  ValidationResult r;
  if (trim(d.text).empty()) r.violations.push_back(fmt::format("document '{}' has empty text", d.id));
  return r;
}

ValidationResult validate_query(const Query& q) {
  ValidationResult r;
  if (trim(q.text).empty()) r.violations.emplace_back("query text is empty");
  if (q.documents) {
    std::unordered_set<std::string> seen;
    for (const auto& d : *q.documents) {
      if (!seen.insert(d.id).second) r.violations.push_back(fmt::format("duplicate document id '{}'", d.id));
      auto doc = validate_document(d);
      r.violations.insert(r.violations.end(), doc.violations.begin(), doc.violations.end());
    }
  }
  return r;
}

ValidationResult validate_plan(const CognitivePlan& plan) {
  ValidationResult r;
  if (plan.sub_questions.empty()) r.violations.emplace_back("empty sub_questions");
  for (std::size_t i = 0; i < plan.sub_questions.size(); ++i) {
    if (trim(plan.sub_questions[i]).empty()) r.violations.push_back(fmt::format("sub_question {} is empty", i + 1));
  }
  if (plan.complexity_score < 1 || plan.complexity_score > 10) {
    r.violations.push_back(fmt::format("score out of [1,10]: {}", plan.complexity_score));
  }
  if (plan.reasoning_token_budget < 1) {
    r.violations.push_back(fmt::format("reasoning_token_budget must be >= 1: {}", plan.reasoning_token_budget));
  }
  return r;
}

ValidationResult validate_pruned_context(const PrunedContext& ctx) {
  ValidationResult r;
  if (ctx.source_doc_ids.size() != ctx.facts.size()) {
    r.violations.emplace_back("source_doc_ids must have one entry per fact");
  }
  if (ctx.input_token_count < 0 || ctx.output_token_count < 0) r.violations.emplace_back("negative token count");
  if (ctx.output_token_count > ctx.input_token_count) {
    r.violations.push_back(fmt::format("output_token_count {} exceeds input_token_count {}", ctx.output_token_count,
                                       ctx.input_token_count));
  }
  return r;
}

ValidationResult validate_reasoning(const ReasoningOutput& out) {
  ValidationResult r;
  for (std::size_t i = 0; i < out.steps.size(); ++i) {
    if (i == 0 && out.steps[i].step_index != 1) r.violations.emplace_back("first step_index must be 1");
    if (i > 0 && out.steps[i].step_index <= out.steps[i - 1].step_index) {
      r.violations.push_back(fmt::format("step_index not strictly increasing at position {}", i + 1));
    }
  }
  if (!out.truncated && trim(out.final_answer).empty()) r.violations.emplace_back("final_answer empty");
  return r;
}

ValidationResult validate_usage(const TokenUsage& usage) {
  ValidationResult r;
  if (usage.prompt_tokens < 0) r.violations.emplace_back("prompt_tokens negative");
  if (usage.completion_tokens < 0) r.violations.emplace_back("completion_tokens negative");
  return r;
}

ValidationResult validate_stage_record(const StageRecord& record) {
  ValidationResult r = validate_usage(record.usage);
  if (record.rendered_prompt.empty()) r.violations.emplace_back("rendered_prompt empty");
  if (record.latency_ms < 0) r.violations.emplace_back("latency_ms negative");
  return r;
}

ValidationResult validate_transcript(const PipelineTranscript& t) {
  ValidationResult r;
  if (t.stages.empty()) r.violations.emplace_back("transcript has no stages");
  for (const auto& s : t.stages) {
    auto sr = validate_stage_record(s);
    r.violations.insert(r.violations.end(), sr.violations.begin(), sr.violations.end());
  }
  const TokenUsage sum = sum_usage(t.stages);
  if (sum.prompt_tokens != t.total_usage.prompt_tokens || sum.completion_tokens != t.total_usage.completion_tokens) {
    r.violations.push_back(fmt::format("total_usage ({}, {}) != sum of stages ({}, {})", t.total_usage.prompt_tokens,
                                       t.total_usage.completion_tokens, sum.prompt_tokens, sum.completion_tokens));
  }
  return r;
}

ValidationResult validate_decomposed_plan(const DecomposedPlan& plan) {
  ValidationResult r;
  if (trim(plan.analysis).empty()) r.violations.emplace_back("empty analysis");
  if (plan.plan.size() < 2) r.violations.push_back(fmt::format("plan has {} steps, need at least 2", plan.plan.size()));
  for (std::size_t i = 0; i < plan.plan.size(); ++i) {
    const auto& s = plan.plan[i];
    if (i == 0 && s.step != 1) r.violations.push_back(fmt::format("first plan step is {}, expected 1", s.step));
    if (i > 0 && s.step <= plan.plan[i - 1].step) {
      r.violations.push_back(fmt::format("plan step {} does not increase (after {})", s.step, plan.plan[i - 1].step));
    }
    if (trim(s.sub_problem).empty()) r.violations.push_back(fmt::format("plan step {} has empty sub_problem", s.step));
  }
  return r;
}

TokenUsage sum_usage(const std::vector<StageRecord>& stages) {
  TokenUsage total{0, 0, UsageSource::backend_reported};
  for (const auto& s : stages) total = total + s.usage;
  return total;
}

std::string_view to_string(UsageSource s) noexcept {
  return s == UsageSource::estimated ? "estimated" : "backend_reported";
}

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::stage1_plan: return "stage1_plan";
    case Stage::stage2_prune: return "stage2_prune";
    case Stage::stage3_reason: return "stage3_reason";
    case Stage::correction: return "correction";
    case Stage::single_pass: return "single_pass";
  }
  return "unknown";
}

std::string_view to_string(PipelineMode m) noexcept {
  switch (m) {
    case PipelineMode::clai_prompt: return "clai_prompt";
    case PipelineMode::clai_tune: return "clai_tune";
    case PipelineMode::standard_cot: return "standard_cot";
  }
  return "unknown";
}

}  // namespace clai
