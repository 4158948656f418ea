#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clai/core/types.hpp"

namespace clai::prompts {

inline constexpr std::string_view kUserQuery = "user_query";
inline constexpr std::string_view kSubQuestions = "sub_questions_from_stage1";
inline constexpr std::string_view kRawDocuments = "raw_documents";
inline constexpr std::string_view kPrunedContext = "pruned_context_from_stage2";
inline constexpr std::string_view kTokenBudget = "token_budget_from_stage1";
inline constexpr std::string_view kRawReasoning = "raw_reasoning_from_stage3";

// A stage prompt with {{name}} placeholder slots.
struct PromptTemplate {
  Stage stage = Stage::stage1_plan;
  std::string body;
};

// Placeholders a stage's template must contain exactly once.
std::vector<std::string_view> required_placeholders(Stage stage);

// Throws TemplateError when a required placeholder is missing or repeated,
// or when the body references a placeholder the stage does not supply.
void check_template(const PromptTemplate& t);

// Replaces every {{name}} slot in a single pass; substituted text is never
// rescanned. Throws TemplateError for slots without a value.
std::string substitute(std::string_view body, const std::map<std::string, std::string, std::less<>>& values);

struct TemplateSet {
  PromptTemplate stage1;
  PromptTemplate stage2;
  PromptTemplate stage3;
  PromptTemplate correction;
};

// The meta-prompt templates compiled into the binary.
const TemplateSet& default_templates();

// Starts from the defaults and replaces any of stage1.txt, stage2.txt,
// stage3.txt or correction.txt found in dir. Every template is checked.
TemplateSet load_templates(const std::filesystem::path& dir);

}  // namespace clai::prompts
