#include "clai/core/codec.hpp"

#include <fmt/format.h>

namespace clai {
namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    out.reset();
  } else {
    out = it->template get<T>();
  }
}

template <typename T>
void get_or(const json& j, const char* key, T& out, T fallback) {
  auto it = j.find(key);
  out = (it == j.end() || it->is_null()) ? fallback : it->template get<T>();
}

[[noreturn]] void bad_enum(std::string_view type, const json& j) {
  throw Error(ErrorKind::SchemaMismatch, fmt::format("unknown {} value {}", type, j.dump()));
}

}  // namespace

std::string dump_canonical(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

void to_json(json& j, UsageSource v) { j = std::string(to_string(v)); }
void from_json(const json& j, UsageSource& v) {
  const auto s = j.get<std::string>();
  if (s == "backend_reported") v = UsageSource::backend_reported;
  else if (s == "estimated") v = UsageSource::estimated;
  else bad_enum("usage source", j);
}

void to_json(json& j, Stage v) { j = std::string(to_string(v)); }
void from_json(const json& j, Stage& v) {
  const auto s = j.get<std::string>();
  for (Stage c : {Stage::stage1_plan, Stage::stage2_prune, Stage::stage3_reason, Stage::correction,
                  Stage::single_pass}) {
    if (s == to_string(c)) {
      v = c;
      return;
    }
  }
  bad_enum("stage", j);
}

void to_json(json& j, PipelineMode v) { j = std::string(to_string(v)); }
void from_json(const json& j, PipelineMode& v) {
  const auto s = j.get<std::string>();
  for (PipelineMode c : {PipelineMode::clai_prompt, PipelineMode::clai_tune, PipelineMode::standard_cot}) {
    if (s == to_string(c)) {
      v = c;
      return;
    }
  }
  bad_enum("pipeline mode", j);
}

void to_json(json& j, const Document& v) {
  j = json{{"id", v.id}, {"text", v.text}};
  put_optional(j, "source", v.source);
}
void from_json(const json& j, Document& v) {
  j.at("id").get_to(v.id);
  j.at("text").get_to(v.text);
  get_optional(j, "source", v.source);
}

void to_json(json& j, const Query& v) {
  j = json{{"id", v.id}, {"text", v.text}};
  put_optional(j, "documents", v.documents);
}
void from_json(const json& j, Query& v) {
  j.at("id").get_to(v.id);
  j.at("text").get_to(v.text);
  get_optional(j, "documents", v.documents);
}

void to_json(json& j, const CognitivePlan& v) {
  j = json{{"sub_questions", v.sub_questions},
           {"complexity_score", v.complexity_score},
           {"reasoning_token_budget", v.reasoning_token_budget}};
}
void from_json(const json& j, CognitivePlan& v) {
  j.at("sub_questions").get_to(v.sub_questions);
  j.at("complexity_score").get_to(v.complexity_score);
  j.at("reasoning_token_budget").get_to(v.reasoning_token_budget);
}

void to_json(json& j, const PrunedContext& v) {
  j = json{{"facts", v.facts},
           {"source_doc_ids", v.source_doc_ids},
           {"input_token_count", v.input_token_count},
           {"output_token_count", v.output_token_count}};
}
void from_json(const json& j, PrunedContext& v) {
  j.at("facts").get_to(v.facts);
  j.at("source_doc_ids").get_to(v.source_doc_ids);
  j.at("input_token_count").get_to(v.input_token_count);
  j.at("output_token_count").get_to(v.output_token_count);
}

void to_json(json& j, const ReasoningStep& v) { j = json{{"step_index", v.step_index}, {"text", v.text}}; }
void from_json(const json& j, ReasoningStep& v) {
  j.at("step_index").get_to(v.step_index);
  j.at("text").get_to(v.text);
}

void to_json(json& j, const SelfCheck& v) {
  j = json{{"all_subquestions_addressed", v.all_subquestions_addressed}, {"answer_consistent", v.answer_consistent}};
}
void from_json(const json& j, SelfCheck& v) {
  j.at("all_subquestions_addressed").get_to(v.all_subquestions_addressed);
  j.at("answer_consistent").get_to(v.answer_consistent);
}

void to_json(json& j, const ReasoningOutput& v) {
  j = json{{"steps", v.steps}, {"final_answer", v.final_answer}, {"truncated", v.truncated}, {"degraded", v.degraded}};
  put_optional(j, "self_check", v.self_check);
}
void from_json(const json& j, ReasoningOutput& v) {
  j.at("steps").get_to(v.steps);
  j.at("final_answer").get_to(v.final_answer);
  j.at("truncated").get_to(v.truncated);
  get_or(j, "degraded", v.degraded, false);
  get_optional(j, "self_check", v.self_check);
}

void to_json(json& j, const TokenUsage& v) {
  j = json{{"prompt_tokens", v.prompt_tokens}, {"completion_tokens", v.completion_tokens}, {"source", v.source}};
}
void from_json(const json& j, TokenUsage& v) {
  j.at("prompt_tokens").get_to(v.prompt_tokens);
  j.at("completion_tokens").get_to(v.completion_tokens);
  j.at("source").get_to(v.source);
  if (v.prompt_tokens < 0 || v.completion_tokens < 0) {
    throw Error(ErrorKind::SchemaMismatch, "token counts must be non-negative");
  }
}

void to_json(json& j, const StageRecord& v) {
  j = json{{"stage", v.stage},
           {"rendered_prompt", v.rendered_prompt},
           {"raw_response", v.raw_response},
           {"usage", v.usage},
           {"latency_ms", v.latency_ms}};
  put_optional(j, "max_tokens", v.max_tokens);
}
void from_json(const json& j, StageRecord& v) {
  j.at("stage").get_to(v.stage);
  j.at("rendered_prompt").get_to(v.rendered_prompt);
  j.at("raw_response").get_to(v.raw_response);
  j.at("usage").get_to(v.usage);
  j.at("latency_ms").get_to(v.latency_ms);
  get_optional(j, "max_tokens", v.max_tokens);
}

void to_json(json& j, const PlanStep& v) { j = json{{"step", v.step}, {"sub_problem", v.sub_problem}}; }
void from_json(const json& j, PlanStep& v) {
  j.at("step").get_to(v.step);
  j.at("sub_problem").get_to(v.sub_problem);
}

void to_json(json& j, const DecomposedPlan& v) { j = json{{"analysis", v.analysis}, {"plan", v.plan}}; }
void from_json(const json& j, DecomposedPlan& v) {
  j.at("analysis").get_to(v.analysis);
  j.at("plan").get_to(v.plan);
}

void to_json(json& j, const PipelineTranscript& v) {
  j = json{{"query_id", v.query_id},
           {"mode", v.mode},
           {"stages", v.stages},
           {"total_usage", v.total_usage},
           {"wall_time_ms", v.wall_time_ms},
           {"final_answer", v.final_answer},
           {"degraded", v.degraded},
           {"issues", v.issues}};
  put_optional(j, "plan", v.plan);
  put_optional(j, "pruned_context", v.pruned_context);
  put_optional(j, "reasoning", v.reasoning);
  put_optional(j, "decomposed_plan", v.decomposed_plan);
}
void from_json(const json& j, PipelineTranscript& v) {
  j.at("query_id").get_to(v.query_id);
  j.at("mode").get_to(v.mode);
  j.at("stages").get_to(v.stages);
  j.at("total_usage").get_to(v.total_usage);
  j.at("wall_time_ms").get_to(v.wall_time_ms);
  j.at("final_answer").get_to(v.final_answer);
  get_or(j, "degraded", v.degraded, false);
  get_or(j, "issues", v.issues, {});
  get_optional(j, "plan", v.plan);
  get_optional(j, "pruned_context", v.pruned_context);
  get_optional(j, "reasoning", v.reasoning);
  get_optional(j, "decomposed_plan", v.decomposed_plan);
  const TokenUsage sum = sum_usage(v.stages);
  if (sum.prompt_tokens != v.total_usage.prompt_tokens || sum.completion_tokens != v.total_usage.completion_tokens) {
    throw Error(ErrorKind::SchemaMismatch, "total_usage does not equal the sum of stage usages");
  }
}

}  // namespace clai
