#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "clai/complexity/estimator.hpp"
#include "clai/core/error.hpp"
#include "clai/core/types.hpp"
#include "clai/gateway/chat.hpp"
#include "clai/prompts/templates.hpp"
#include "clai/pruner/pruner.hpp"

namespace clai::pipeline {

enum class PruneMode { llm_stage2, deterministic, off };
enum class IclMode { llm_self_assess, local_heuristic };

struct PipelineConfig {
  gateway::BackendConfig backend;
  std::string model = "default";
  complexity::BudgetPolicy budget_policy;
  complexity::FeatureWeights weights;
  bool enable_correction = true;
  PruneMode prune_mode = PruneMode::llm_stage2;
  IclMode icl_mode = IclMode::llm_self_assess;
  // Stage-3 cap is ceil(budget * budget_slack).
  double budget_slack = 1.2;
  double prune_threshold = pruner::kDefaultThreshold;
  prompts::TemplateSet templates = prompts::default_templates();
};

ValidationResult validate_config(const PipelineConfig& cfg);

std::string_view to_string(PruneMode m) noexcept;
std::string_view to_string(IclMode m) noexcept;
PruneMode parse_prune_mode(std::string_view s);
IclMode parse_icl_mode(std::string_view s);

// Carries whatever the run produced before the failure.
class PipelineError : public Error {
 public:
  PipelineError(const Error& cause, PipelineTranscript partial);

  const PipelineTranscript& partial() const noexcept { return partial_; }

 private:
  PipelineTranscript partial_;
};

bool is_rag_task(const Query& q);

// ceil(budget * slack), computed so that exact products are not bumped up by
// floating-point noise.
std::int64_t stage3_cap(std::int64_t budget, double slack);

TokenUsage total_tokens(const PipelineTranscript& t);

// The baseline prompt: documents (if any), the query, then
// "Let's think step by step."
std::string render_cot(const Query& q);

// Milliseconds from an arbitrary epoch.
using Clock = std::function<std::int64_t()>;
Clock steady_clock_ms();

class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, gateway::Backend& backend, Clock clock = steady_clock_ms());

  PipelineTranscript run(const Query& q, PipelineMode mode);
  PipelineTranscript run_clai_prompt(const Query& q);
  PipelineTranscript run_standard_cot(const Query& q);
  PipelineTranscript run_tuned(const Query& q);

  const PipelineConfig& config() const noexcept { return cfg_; }

 private:
  StageRecord call(Stage stage, std::string prompt, std::optional<std::int64_t> max_tokens,
                   std::optional<std::string>* finish_reason = nullptr);
  PipelineTranscript finish(PipelineTranscript t, std::int64_t started);

  PipelineConfig cfg_;
  gateway::Backend& backend_;
  Clock clock_;
};

// One-shot helpers that build the backend from cfg.backend.
PipelineTranscript run_clai_prompt(const Query& q, const PipelineConfig& cfg);
PipelineTranscript run_standard_cot(const Query& q, const PipelineConfig& cfg);
PipelineTranscript run_tuned(const Query& q, const PipelineConfig& cfg);

}  // namespace clai::pipeline
