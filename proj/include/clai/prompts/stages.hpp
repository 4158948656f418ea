#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clai/core/types.hpp"
#include "clai/prompts/templates.hpp"

// Rendering of the stage prompts and parsing of the model's replies into
// domain types.
namespace clai::prompts {

// Replaces every `"""` with `'''` so user text cannot close a fence.
std::string escape_fences(std::string_view text);

// "1. a\n2. b"
std::string numbered_list(const std::vector<std::string>& items);

// "--- doc:<id> ---\n<text>" blocks joined by newlines.
std::string format_documents(const std::vector<Document>& docs);

// "- fact" lines, or "None" when there is no pruned context.
std::string format_pruned_context(const std::optional<PrunedContext>& pruned);

// Markdown form of a reasoning output in the Stage-3 response grammar.
std::string format_reasoning(const ReasoningOutput& out);

std::string render_stage1(const Query& q, const TemplateSet& templates = default_templates());

// Throws NotApplicable when docs is empty.
std::string render_stage2(const Query& q, const CognitivePlan& plan, const std::vector<Document>& docs,
                          const TemplateSet& templates = default_templates());

std::string render_stage3(const Query& q, const CognitivePlan& plan, const std::optional<PrunedContext>& pruned,
                          std::int64_t budget, const TemplateSet& templates = default_templates());

std::string render_correction(const Query& q, const ReasoningOutput& a_raw, const CognitivePlan& plan,
                              const TemplateSet& templates = default_templates());

// "### Instruction:\n{instruction}\n\n[### Input:\n{input}\n\n]### Response:\n"
std::string render_tuned(std::string_view instruction, const std::optional<std::string>& input = std::nullopt);

// Drops a leading "N." / "N)" enumeration followed by whitespace.
std::string strip_enumeration(std::string_view text);

// Errors: NoJsonFound, SchemaMismatch, PlanInvalid.
CognitivePlan parse_stage1(std::string_view raw);

// Facts only; token counts and provenance are left for the caller.
PrunedContext parse_stage2(std::string_view raw);

// Errors: MissingFinalAnswer when no answer can be recovered.
ReasoningOutput parse_stage3(std::string_view raw);

// Parses a Listing-style plan object ({"analysis", "plan"} either at the top
// level or under "output"). Returns nullopt when the text holds no such
// object; throws SchemaMismatch when it does but the plan is malformed.
std::optional<DecomposedPlan> parse_decomposed_plan(std::string_view raw);

}  // namespace clai::prompts
