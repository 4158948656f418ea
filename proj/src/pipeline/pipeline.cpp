#include "clai/pipeline/pipeline.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <limits>

#include "clai/core/codec.hpp"
#include "clai/prompts/stages.hpp"

namespace clai::pipeline {
namespace {

std::string join_space(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

std::string joined_documents(const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    if (!out.empty()) out += ' ';
    out += d.text;
  }
  return out;
}

StageRecord local_record(Stage stage, std::string description, std::string payload) {
  StageRecord r;
  r.stage = stage;
  r.rendered_prompt = std::move(description);
  r.raw_response = std::move(payload);
  r.usage.source = UsageSource::estimated;
  return r;
}

void require_query(const Query& q) {
  auto v = validate_query(q);
  if (!v.ok()) fail(ErrorKind::InvalidQuery, v.violations.front());
}

}  // namespace

ValidationResult validate_config(const PipelineConfig& cfg) {
  ValidationResult r = complexity::validate_policy(cfg.budget_policy);
  if (!(cfg.budget_slack >= 1.0) || !std::isfinite(cfg.budget_slack)) r.violations.push_back("budget_slack must be >= 1");
  if (!(cfg.prune_threshold >= 0.0 && cfg.prune_threshold <= 1.0))
    r.violations.push_back("prune_threshold must be in [0,1]");
  if (cfg.model.empty()) r.violations.push_back("model must be set");
  return r;
}

std::string_view to_string(PruneMode m) noexcept {
  switch (m) {
    case PruneMode::llm_stage2: return "llm_stage2";
    case PruneMode::deterministic: return "deterministic";
    case PruneMode::off: return "off";
  }
  return "off";
}

std::string_view to_string(IclMode m) noexcept {
  return m == IclMode::llm_self_assess ? "llm_self_assess" : "local_heuristic";
}

PruneMode parse_prune_mode(std::string_view s) {
  if (s == "llm_stage2") return PruneMode::llm_stage2;
  if (s == "deterministic") return PruneMode::deterministic;
  if (s == "off") return PruneMode::off;
  fail(ErrorKind::ConfigError, fmt::format("unknown prune_mode '{}'", s));
}

IclMode parse_icl_mode(std::string_view s) {
  if (s == "llm_self_assess") return IclMode::llm_self_assess;
  if (s == "local_heuristic") return IclMode::local_heuristic;
  fail(ErrorKind::ConfigError, fmt::format("unknown icl_mode '{}'", s));
}

PipelineError::PipelineError(const Error& cause, PipelineTranscript partial)
    : Error(cause), partial_(std::move(partial)) {}

bool is_rag_task(const Query& q) { return q.documents && !q.documents->empty(); }

std::int64_t stage3_cap(std::int64_t budget, double slack) {
  require(budget >= 1, "budget must be >= 1");
  require(slack >= 1.0 && std::isfinite(slack), "slack must be >= 1");
  const long double cap = std::ceil(static_cast<long double>(budget) * slack - 1e-9L);
  if (cap >= static_cast<long double>(std::numeric_limits<std::int64_t>::max()))
    return std::numeric_limits<std::int64_t>::max();
  return static_cast<std::int64_t>(cap);
}

TokenUsage total_tokens(const PipelineTranscript& t) { return sum_usage(t.stages); }

std::string render_cot(const Query& q) {
  std::string out;
  if (is_rag_task(q)) out = prompts::format_documents(*q.documents) + "\n\n";
  out += q.text;
  out += "\n\nLet's think step by step.";
  return out;
}

Clock steady_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

Pipeline::Pipeline(PipelineConfig cfg, gateway::Backend& backend, Clock clock)
    : cfg_(std::move(cfg)), backend_(backend), clock_(std::move(clock)) {
  if (auto v = validate_config(cfg_); !v) fail(ErrorKind::ConfigError, v.violations.front());
  prompts::check_template(cfg_.templates.stage1);
  prompts::check_template(cfg_.templates.stage2);
  prompts::check_template(cfg_.templates.stage3);
  prompts::check_template(cfg_.templates.correction);
}

StageRecord Pipeline::call(Stage stage, std::string prompt, std::optional<std::int64_t> max_tokens,
                           std::optional<std::string>* finish_reason) {
  gateway::ChatRequest req;
  req.model = cfg_.model;
  req.user = prompt;
  req.temperature = 0.0;
  req.max_tokens = max_tokens;

  const auto t0 = clock_();
  auto resp = backend_.complete(req);
  const auto t1 = clock_();

  StageRecord r;
  r.stage = stage;
  r.rendered_prompt = std::move(prompt);
  r.raw_response = std::move(resp.text);
  r.usage = resp.usage;
  r.latency_ms = std::max<std::int64_t>(0, t1 - t0);
  r.max_tokens = max_tokens;
  if (finish_reason) {
    *finish_reason = resp.finish_reason;
    if (max_tokens && resp.usage.completion_tokens >= *max_tokens) *finish_reason = "length";
  }
  return r;
}

PipelineTranscript Pipeline::finish(PipelineTranscript t, std::int64_t started) {
  t.total_usage = sum_usage(t.stages);
  t.wall_time_ms = std::max<std::int64_t>(0, clock_() - started);
  return t;
}

PipelineTranscript Pipeline::run(const Query& q, PipelineMode mode) {
  switch (mode) {
    case PipelineMode::clai_prompt: return run_clai_prompt(q);
    case PipelineMode::clai_tune: return run_tuned(q);
    case PipelineMode::standard_cot: return run_standard_cot(q);
  }
  fail(ErrorKind::PreconditionViolation, "unknown pipeline mode");
}

PipelineTranscript Pipeline::run_clai_prompt(const Query& q) {
  require_query(q);
  const auto started = clock_();
  PipelineTranscript t;
  t.query_id = q.id;
  t.mode = PipelineMode::clai_prompt;

  try {
    // Stage 1: complexity estimate, decomposition and budget.
    CognitivePlan plan;
    if (cfg_.icl_mode == IclMode::local_heuristic) {
      plan = complexity::heuristic_plan(q.text, cfg_.budget_policy, cfg_.weights);
      t.stages.push_back(local_record(Stage::stage1_plan, "local heuristic plan for: " + q.text, encode(plan)));
    } else {
      t.stages.push_back(call(Stage::stage1_plan, prompts::render_stage1(q, cfg_.templates), std::nullopt));
      try {
        plan = prompts::parse_stage1(t.stages.back().raw_response);
      } catch (const Error& e) {
        t.degraded = true;
        t.issues.push_back(fmt::format("stage1: {}; using local heuristic plan", e.what()));
        try {
          plan = complexity::heuristic_plan(q.text, cfg_.budget_policy, cfg_.weights);
        } catch (const Error& h) {
          fail(ErrorKind::PlanUnrecoverable, fmt::format("{}; heuristic fallback: {}", e.what(), h.what()));
        }
      }
    }
    t.plan = plan;

    // Stage 2: reduce the documents to the facts the plan needs.
    std::optional<PrunedContext> context;
    if (is_rag_task(q)) {
      const auto& docs = *q.documents;
      if (cfg_.prune_mode == PruneMode::llm_stage2) {
        t.stages.push_back(call(Stage::stage2_prune, prompts::render_stage2(q, plan, docs, cfg_.templates), std::nullopt));
        PrunedContext ctx = prompts::parse_stage2(t.stages.back().raw_response);
        for (std::size_t i = 0; i < ctx.facts.size(); ++i) {
          for (const auto& d : docs) {
            if (d.text.find(ctx.facts[i]) != std::string::npos) ctx.source_doc_ids[i].push_back(d.id);
          }
        }
        ctx.input_token_count = gateway::estimate_tokens(joined_documents(docs));
        ctx.output_token_count = gateway::estimate_tokens(join_space(ctx.facts));
        if (ctx.output_token_count > ctx.input_token_count) {
          t.issues.push_back("stage2: pruned context longer than the documents; using the documents");
          ctx.facts.clear();
          ctx.source_doc_ids.clear();
          for (const auto& d : docs) {
            ctx.facts.push_back(d.text);
            ctx.source_doc_ids.push_back({d.id});
          }
          ctx.output_token_count = ctx.input_token_count;
        }
        context = ctx;
        t.pruned_context = ctx;
      } else if (cfg_.prune_mode == PruneMode::deterministic) {
        PrunedContext ctx = pruner::prune(docs, plan, cfg_.prune_threshold);
        t.stages.push_back(local_record(Stage::stage2_prune,
                                        fmt::format("deterministic pruning at threshold {}", cfg_.prune_threshold),
                                        encode(ctx)));
        context = ctx;
        t.pruned_context = ctx;
      } else {
        PrunedContext all;
        for (const auto& d : docs) {
          all.facts.push_back(d.text);
          all.source_doc_ids.push_back({d.id});
        }
        context = all;
      }
    }

    // Stage 3: budgeted reasoning.
    const auto cap = stage3_cap(plan.reasoning_token_budget, cfg_.budget_slack);
    std::optional<std::string> finish_reason;
    t.stages.push_back(call(Stage::stage3_reason,
                            prompts::render_stage3(q, plan, context, plan.reasoning_token_budget, cfg_.templates), cap,
                            &finish_reason));
    const bool truncated = finish_reason && *finish_reason == "length";
    ReasoningOutput reasoning;
    try {
      reasoning = prompts::parse_stage3(t.stages.back().raw_response);
    } catch (const Error& e) {
      if (!truncated) throw;
      reasoning.degraded = true;
    }
    reasoning.truncated = truncated;
    if (truncated && reasoning.degraded) {
      // Cut off before the answer section: whatever was recovered is not an answer.
      reasoning.final_answer.clear();
      t.issues.push_back("stage3: generation hit the token cap before a final answer");
    }
    if (reasoning.degraded) t.degraded = true;
    t.reasoning = reasoning;
    t.final_answer = reasoning.final_answer;

    // Optional self-correction pass.
    if (cfg_.enable_correction) {
      if (reasoning.final_answer.empty()) {
        t.degraded = true;
        t.issues.push_back("correction: skipped, no stage-3 answer to check");
      } else {
        t.stages.push_back(
            call(Stage::correction, prompts::render_correction(q, reasoning, plan, cfg_.templates), std::nullopt));
        try {
          auto corrected = prompts::parse_stage3(t.stages.back().raw_response);
          if (corrected.degraded) {
            t.issues.push_back("correction: no final answer header; keeping stage-3 answer");
          } else {
            t.final_answer = corrected.final_answer;
            if (corrected.self_check) t.reasoning->self_check = corrected.self_check;
          }
        } catch (const Error& e) {
          t.issues.push_back(fmt::format("correction: {}; keeping stage-3 answer", e.what()));
        }
      }
    }
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError(e, finish(std::move(t), started));
  }
  return finish(std::move(t), started);
}

PipelineTranscript Pipeline::run_standard_cot(const Query& q) {
  require_query(q);
  const auto started = clock_();
  PipelineTranscript t;
  t.query_id = q.id;
  t.mode = PipelineMode::standard_cot;
  try {
    t.stages.push_back(call(Stage::single_pass, render_cot(q), std::nullopt));
  } catch (const Error& e) {
    throw PipelineError(e, finish(std::move(t), started));
  }
  t.final_answer = trim(t.stages.back().raw_response);
  return finish(std::move(t), started);
}

PipelineTranscript Pipeline::run_tuned(const Query& q) {
  require_query(q);
  const auto started = clock_();
  PipelineTranscript t;
  t.query_id = q.id;
  t.mode = PipelineMode::clai_tune;
  std::optional<std::string> input;
  if (is_rag_task(q)) input = prompts::format_documents(*q.documents);
  try {
    t.stages.push_back(call(Stage::single_pass, prompts::render_tuned(q.text, input), std::nullopt));
  } catch (const Error& e) {
    throw PipelineError(e, finish(std::move(t), started));
  }
  const std::string& raw = t.stages.back().raw_response;
  t.final_answer = trim(raw);
  try {
    t.decomposed_plan = prompts::parse_decomposed_plan(raw);
  } catch (const Error& e) {
    t.degraded = true;
    t.issues.push_back(e.what());
  }
  if (!t.decomposed_plan && !t.degraded) {
    try {
      auto r = prompts::parse_stage3(raw);
      if (!r.degraded) {
        t.final_answer = r.final_answer;
        t.reasoning = std::move(r);
      }
    } catch (const Error&) {
    }
  }
  return finish(std::move(t), started);
}

namespace {

template <typename Fn>
PipelineTranscript one_shot(const PipelineConfig& cfg, Fn fn) {
  auto backend = gateway::make_backend(cfg.backend);
  Pipeline p(cfg, *backend);
  return fn(p);
}

}  // namespace

PipelineTranscript run_clai_prompt(const Query& q, const PipelineConfig& cfg) {
  return one_shot(cfg, [&](Pipeline& p) { return p.run_clai_prompt(q); });
}

PipelineTranscript run_standard_cot(const Query& q, const PipelineConfig& cfg) {
  return one_shot(cfg, [&](Pipeline& p) { return p.run_standard_cot(q); });
}

PipelineTranscript run_tuned(const Query& q, const PipelineConfig& cfg) {
  return one_shot(cfg, [&](Pipeline& p) { return p.run_tuned(q); });
}

}  // namespace clai::pipeline
