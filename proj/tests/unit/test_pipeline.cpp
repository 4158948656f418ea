#include <gtest/gtest.h>

#include <cmath>

#include "clai/bench/tasks.hpp"
#include "clai/core/codec.hpp"
#include "clai/gateway/backends.hpp"
#include "clai/pipeline/pipeline.hpp"
#include "clai/prompts/stages.hpp"
#include "scripted.hpp"

using namespace clai;
using namespace clai::pipeline;
using clai::testing::LambdaBackend;
using clai::testing::PromptKind;

namespace {

std::vector<Query> fixture_queries() {
  std::vector<Query> out;
  for (const auto& t : bench::load_tasks(clai::testing::fixture("pipeline/tasks.jsonl"))) out.push_back(bench::to_query(t));
  return out;
}

Query by_id(const std::string& id) {
  for (auto& q : fixture_queries()) {
    if (q.id == id) return q;
  }
  throw std::runtime_error("no fixture query " + id);
}

struct Replay {
  gateway::ReplayBackend backend{clai::testing::fixture("pipeline/replay.jsonl")};
};

std::vector<Stage> stages_of(const PipelineTranscript& t) {
  std::vector<Stage> out;
  for (const auto& s : t.stages) out.push_back(s.stage);
  return out;
}

const std::string kStage3Ok =
    "**Reasoning:**\nStep 1: 2 + 2 = 4\n\n**Final Answer:**\n4\n\n**Self-Correction Check:**\n- All sub-questions "
    "addressed: Yes\n- Final answer consistent with reasoning: Yes";
const std::string kPlanOk = R"({"sub_questions":["1. Add"],"complexity_score":1,"reasoning_token_budget":50})";

gateway::ChatResponse by_kind(const gateway::ChatRequest& r, std::map<PromptKind, std::string> replies) {
  const auto kind = clai::testing::classify_prompt(r.user);
  auto it = replies.find(kind);
  if (it == replies.end()) throw Error::backend(500, "no reply for this stage");
  return clai::testing::reply(it->second);
}

}  // namespace

TEST(IsRagTask, Rule) {
  EXPECT_TRUE(is_rag_task({"q", "x", std::vector<Document>{{"a", "t", {}}, {"b", "u", {}}}}));
  EXPECT_FALSE(is_rag_task({"q", "x", std::nullopt}));
  EXPECT_FALSE(is_rag_task({"q", "x", std::vector<Document>{}}));
}

TEST(Stage3Cap, CeilOfBudgetTimesSlack) {
  EXPECT_EQ(stage3_cap(50, 1.2), 60);
  EXPECT_EQ(stage3_cap(200, 1.2), 240);
  EXPECT_EQ(stage3_cap(500, 1.2), 600);
  EXPECT_EQ(stage3_cap(250, 1.2), 300);  // 250 * 1.2 is 300.00000000000006 in binary
  EXPECT_EQ(stage3_cap(137, 1.2), 165);
  EXPECT_EQ(stage3_cap(333, 1.2), 400);
  EXPECT_EQ(stage3_cap(7, 1.0), 7);
  EXPECT_EQ(stage3_cap(1, 1.5), 2);
  EXPECT_EQ(stage3_cap(std::numeric_limits<std::int64_t>::max(), 2.0), std::numeric_limits<std::int64_t>::max());
  EXPECT_THROW(stage3_cap(0, 1.2), Error);
  EXPECT_THROW(stage3_cap(10, 0.9), Error);
}

TEST(Stage3Cap, MatchesExactRationalArithmetic) {
  // Slack 6/5: cap = ceil(6b/5) computed in integers.
  for (std::int64_t b = 1; b <= 5000; ++b) ASSERT_EQ(stage3_cap(b, 1.2), (6 * b + 4) / 5) << b;
  // Slack 3/2.
  for (std::int64_t b = 1; b <= 5000; ++b) ASSERT_EQ(stage3_cap(b, 1.5), (3 * b + 1) / 2) << b;
}

TEST(TotalTokens, Arithmetic) {
  PipelineTranscript t;
  for (auto [p, c] : {std::pair{100, 50}, {200, 30}, {150, 80}}) {
    StageRecord s;
    s.rendered_prompt = "x";
    s.usage = {p, c, UsageSource::backend_reported};
    t.stages.push_back(s);
  }
  EXPECT_EQ(total_tokens(t), (TokenUsage{450, 160, UsageSource::backend_reported}));
  t.stages.resize(1);
  EXPECT_EQ(total_tokens(t), (TokenUsage{100, 50, UsageSource::backend_reported}));
}

TEST(PipelineConfig, Validation) {
  PipelineConfig c;
  EXPECT_TRUE(validate_config(c).ok());
  c.budget_slack = 0.9;
  EXPECT_FALSE(validate_config(c).ok());
  c = {};
  c.prune_threshold = 1.5;
  EXPECT_FALSE(validate_config(c).ok());
  c = {};
  c.budget_policy.low_budget = 1000;
  EXPECT_FALSE(validate_config(c).ok());
  LambdaBackend b([](const auto&) { return clai::testing::reply("x"); });
  c.budget_slack = std::nan("");
  EXPECT_THROW(Pipeline(c, b), Error);
  EXPECT_EQ(parse_prune_mode("deterministic"), PruneMode::deterministic);
  EXPECT_EQ(parse_icl_mode("local_heuristic"), IclMode::local_heuristic);
  EXPECT_THROW(parse_prune_mode("sometimes"), Error);
}

// --- replay fixture examples ---------------------------------------------

TEST(RunClaiPrompt, NonRagWithCorrectionHasThreeStages) {
  Replay r;
  Pipeline p({}, r.backend, clai::testing::ticking_clock());
  const auto t = p.run_clai_prompt(by_id("p01"));
  EXPECT_EQ(stages_of(t), (std::vector{Stage::stage1_plan, Stage::stage3_reason, Stage::correction}));
  EXPECT_EQ(t.final_answer, "87");
  EXPECT_FALSE(t.degraded);
  ASSERT_TRUE(t.plan.has_value());
  EXPECT_EQ(t.plan->reasoning_token_budget, 200);
  EXPECT_EQ(t.stages[1].max_tokens, 240);
  EXPECT_FALSE(t.stages[0].max_tokens.has_value());
  EXPECT_FALSE(t.stages[2].max_tokens.has_value());
  EXPECT_TRUE(validate_transcript(t).ok());
  EXPECT_EQ(t.mode, PipelineMode::clai_prompt);
}

TEST(RunClaiPrompt, RagWithoutCorrectionHasThreeStages) {
  Replay r;
  PipelineConfig cfg;
  cfg.enable_correction = false;
  Pipeline p(cfg, r.backend, clai::testing::ticking_clock());
  const auto q = by_id("r01");
  ASSERT_EQ(q.documents->size(), 2u);
  const auto t = p.run_clai_prompt(q);
  EXPECT_EQ(stages_of(t), (std::vector{Stage::stage1_plan, Stage::stage2_prune, Stage::stage3_reason}));
  ASSERT_TRUE(t.pruned_context.has_value());
  EXPECT_EQ(t.pruned_context->facts.size(), 2u);
  EXPECT_EQ(t.pruned_context->source_doc_ids[0], std::vector<std::string>{"d1"});
  EXPECT_LT(t.pruned_context->output_token_count, t.pruned_context->input_token_count);
  EXPECT_EQ(t.final_answer, "Marie Curie");
}

TEST(RunClaiPrompt, ProseStage1FallsBackToHeuristicPlan) {
  Replay r;
  Pipeline p({}, r.backend, clai::testing::ticking_clock());
  const auto q = by_id("p08");
  const auto t = p.run_clai_prompt(q);
  EXPECT_TRUE(t.degraded);
  ASSERT_FALSE(t.issues.empty());
  EXPECT_NE(t.issues[0].find("NoJsonFound"), std::string::npos);
  EXPECT_EQ(t.plan->sub_questions, std::vector<std::string>{q.text});
  EXPECT_EQ(t.final_answer, "210");
  EXPECT_EQ(t.stages.size(), 3u);
}

TEST(RunClaiPrompt, RepairedStage1IsNotDegraded) {
  Replay r;
  Pipeline p({}, r.backend, clai::testing::ticking_clock());
  const auto t = p.run_clai_prompt(by_id("p10"));
  EXPECT_FALSE(t.degraded);
  EXPECT_EQ(t.plan->sub_questions, std::vector<std::string>{"What is 0.15 times 240?"});
}

TEST(RunClaiPrompt, TruncatedStage3SkipsCorrection) {
  Replay r;
  Pipeline p({}, r.backend, clai::testing::ticking_clock());
  const auto t = p.run_clai_prompt(by_id("p11"));
  EXPECT_EQ(stages_of(t), (std::vector{Stage::stage1_plan, Stage::stage3_reason}));
  ASSERT_TRUE(t.reasoning.has_value());
  EXPECT_TRUE(t.reasoning->truncated);
  EXPECT_TRUE(t.final_answer.empty());
  EXPECT_TRUE(t.degraded);
  EXPECT_TRUE(validate_reasoning(*t.reasoning).ok());
}

TEST(RunClaiPrompt, EmptyStage2MeansNothingRelevant) {
  Replay r;
  Pipeline p({}, r.backend, clai::testing::ticking_clock());
  const auto t = p.run_clai_prompt(by_id("r05"));
  ASSERT_TRUE(t.pruned_context.has_value());
  EXPECT_TRUE(t.pruned_context->facts.empty());
  EXPECT_EQ(t.pruned_context->output_token_count, 0);
  EXPECT_NE(t.stages[2].rendered_prompt.find("No relevant facts"), std::string::npos);
}

TEST(RunClaiPrompt, StageCountAndBudgetLawsOverFixtureSet) {
  for (bool correction : {true, false}) {
    Replay r;
    PipelineConfig cfg;
    cfg.enable_correction = correction;
    Pipeline p(cfg, r.backend, clai::testing::ticking_clock());
    for (const auto& q : fixture_queries()) {
      const auto t = p.run_clai_prompt(q);
      const bool answered = !(t.reasoning && t.reasoning->final_answer.empty());
      const std::size_t expected = 2 + (is_rag_task(q) ? 1 : 0) + (correction && answered ? 1 : 0);
      EXPECT_EQ(t.stages.size(), expected) << q.id;
      EXPECT_TRUE(validate_transcript(t).ok()) << q.id;
      for (const auto& s : t.stages) {
        if (s.stage == Stage::stage3_reason) {
          const auto budget = t.plan->reasoning_token_budget;
          EXPECT_EQ(s.max_tokens, static_cast<std::int64_t>(std::ceil(static_cast<double>(budget) * 6 / 5 - 1e-9))) << q.id;
        } else {
          EXPECT_FALSE(s.max_tokens.has_value()) << q.id;
        }
      }
    }
  }
}

TEST(RunClaiPrompt, ReplayRunsAreByteIdentical) {
  std::vector<std::string> runs;
  for (int i = 0; i < 3; ++i) {
    Replay r;
    Pipeline p({}, r.backend, clai::testing::ticking_clock());
    std::string all;
    for (const auto& q : fixture_queries()) {
      for (auto mode : {PipelineMode::clai_prompt, PipelineMode::standard_cot, PipelineMode::clai_tune})
        all += encode(p.run(q, mode)) + "\n";
    }
    runs.push_back(all);
  }
  EXPECT_EQ(runs[0], runs[1]);
  EXPECT_EQ(runs[1], runs[2]);
}

// --- modes -------------------------------------------------------------

TEST(RunClaiPrompt, LocalHeuristicSkipsTheStage1Call) {
  LambdaBackend b([](const gateway::ChatRequest& r) {
    return by_kind(r, {{PromptKind::stage3, kStage3Ok}, {PromptKind::correction, "**Final Answer:**\n4"}});
  });
  PipelineConfig cfg;
  cfg.icl_mode = IclMode::local_heuristic;
  Pipeline p(cfg, b);
  const auto t = p.run_clai_prompt({"q", "What is 2+2?", std::nullopt});
  EXPECT_EQ(t.stages.size(), 3u);
  EXPECT_EQ(t.stages[0].stage, Stage::stage1_plan);
  EXPECT_EQ(t.stages[0].usage.total(), 0);
  EXPECT_EQ(decode<CognitivePlan>(t.stages[0].raw_response), *t.plan);
  EXPECT_EQ(b.requests().size(), 2u);
  EXPECT_EQ(b.requests()[0].max_tokens, 60);
  EXPECT_FALSE(t.degraded);
}

TEST(RunClaiPrompt, DeterministicPruningRecordsALocalStage) {
  LambdaBackend b([](const gateway::ChatRequest& r) {
    return by_kind(r, {{PromptKind::stage1, R"({"sub_questions":["titan saturn moon"],"complexity_score":2,"reasoning_token_budget":50})"},
                       {PromptKind::stage3, kStage3Ok}});
  });
  PipelineConfig cfg;
  cfg.prune_mode = PruneMode::deterministic;
  cfg.enable_correction = false;
  Pipeline p(cfg, b);
  const Query q{"q", "Which moon?", std::vector<Document>{{"s", "Titan is the largest moon of Saturn. Cats sleep.", {}}}};
  const auto t = p.run_clai_prompt(q);
  EXPECT_EQ(stages_of(t), (std::vector{Stage::stage1_plan, Stage::stage2_prune, Stage::stage3_reason}));
  EXPECT_EQ(t.pruned_context->facts, std::vector<std::string>{"Titan is the largest moon of Saturn."});
  EXPECT_EQ(t.stages[1].usage.total(), 0);
  EXPECT_EQ(b.requests().size(), 2u);
  EXPECT_NE(b.requests()[1].user.find("Pruned Context: - Titan is the largest moon of Saturn."), std::string::npos);
}

TEST(RunClaiPrompt, PruneOffPassesFullDocuments) {
  LambdaBackend b([](const gateway::ChatRequest& r) {
    return by_kind(r, {{PromptKind::stage1, kPlanOk}, {PromptKind::stage3, kStage3Ok}});
  });
  PipelineConfig cfg;
  cfg.prune_mode = PruneMode::off;
  cfg.enable_correction = false;
  Pipeline p(cfg, b);
  const Query q{"q", "Which moon?", std::vector<Document>{{"s", "Titan is large. Cats sleep.", {}}}};
  const auto t = p.run_clai_prompt(q);
  EXPECT_EQ(t.stages.size(), 2u);
  EXPECT_FALSE(t.pruned_context.has_value());
  EXPECT_NE(b.requests()[1].user.find("- Titan is large. Cats sleep."), std::string::npos);
}

TEST(RunClaiPrompt, OverlongStage2FallsBackToDocuments) {
  LambdaBackend b([](const gateway::ChatRequest& r) {
    return by_kind(r, {{PromptKind::stage1, kPlanOk},
                       {PromptKind::stage2, "- " + std::string(400, 'x')},
                       {PromptKind::stage3, kStage3Ok}});
  });
  PipelineConfig cfg;
  cfg.enable_correction = false;
  Pipeline p(cfg, b);
  const auto t = p.run_clai_prompt({"q", "x?", std::vector<Document>{{"a", "Short.", {}}}});
  EXPECT_EQ(t.pruned_context->facts, std::vector<std::string>{"Short."});
  EXPECT_EQ(t.pruned_context->input_token_count, t.pruned_context->output_token_count);
  EXPECT_FALSE(t.issues.empty());
}

TEST(RunClaiPrompt, CorrectionReplacesAnswerOnlyWhenParsed) {
  for (auto [correction_text, expected] : {std::pair<std::string, std::string>{"**Final Answer:**\n5", "5"},
                                           {"I agree with everything.", "4"},
                                           {"", "4"}}) {
    LambdaBackend b([&, ct = correction_text](const gateway::ChatRequest& r) {
      return by_kind(r, {{PromptKind::stage1, kPlanOk}, {PromptKind::stage3, kStage3Ok}, {PromptKind::correction, ct}});
    });
    Pipeline p({}, b);
    const auto t = p.run_clai_prompt({"q", "What is 2+2?", std::nullopt});
    EXPECT_EQ(t.final_answer, expected) << correction_text;
    EXPECT_EQ(t.stages.size(), 3u);
  }
}

TEST(RunClaiPrompt, CapHitWithAnswerStillCounts) {
  LambdaBackend b([](const gateway::ChatRequest& r) {
    if (clai::testing::classify_prompt(r.user) == PromptKind::stage3) return clai::testing::reply(kStage3Ok, 60, "stop");
    return by_kind(r, {{PromptKind::stage1, kPlanOk}, {PromptKind::correction, "**Final Answer:**\n4"}});
  });
  Pipeline p({}, b);
  const auto t = p.run_clai_prompt({"q", "What is 2+2?", std::nullopt});
  EXPECT_TRUE(t.reasoning->truncated);
  EXPECT_EQ(t.final_answer, "4");
  EXPECT_FALSE(t.degraded);
}

TEST(RunClaiPrompt, BackendErrorCarriesPartialTranscript) {
  LambdaBackend b([](const gateway::ChatRequest& r) {
    if (clai::testing::classify_prompt(r.user) == PromptKind::stage3) throw Error::backend(503, "overloaded");
    return by_kind(r, {{PromptKind::stage1, kPlanOk}});
  });
  Pipeline p({}, b);
  try {
    p.run_clai_prompt({"q", "What is 2+2?", std::nullopt});
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BackendError);
    EXPECT_EQ(e.http_status(), 503);
    ASSERT_EQ(e.partial().stages.size(), 1u);
    EXPECT_EQ(e.partial().total_usage, sum_usage(e.partial().stages));
  }
}

TEST(RunClaiPrompt, PlanUnrecoverableWhenHeuristicAlsoFails) {
  LambdaBackend b([](const gateway::ChatRequest&) { return clai::testing::reply("no json here"); });
  PipelineConfig cfg;
  cfg.weights.entity = -1;  // makes the heuristic scorer reject its input
  Pipeline p(cfg, b);
  try {
    p.run_clai_prompt({"q", "What is 2+2?", std::nullopt});
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PlanUnrecoverable);
    EXPECT_EQ(e.partial().stages.size(), 1u);
  }
}

TEST(RunClaiPrompt, InvalidQueryIsRejected) {
  LambdaBackend b([](const gateway::ChatRequest&) { return clai::testing::reply("x"); });
  Pipeline p({}, b);
  try {
    p.run_clai_prompt({"q", " ", std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidQuery);
  }
  EXPECT_TRUE(b.requests().empty());
}

TEST(RunClaiPrompt, LatencyComesFromTheInjectedClock) {
  LambdaBackend b([](const gateway::ChatRequest& r) {
    return by_kind(r, {{PromptKind::stage1, kPlanOk}, {PromptKind::stage3, kStage3Ok}, {PromptKind::correction, kStage3Ok}});
  });
  Pipeline p({}, b, clai::testing::ticking_clock());
  const auto t = p.run_clai_prompt({"q", "What is 2+2?", std::nullopt});
  for (const auto& s : t.stages) EXPECT_EQ(s.latency_ms, 1);
  EXPECT_EQ(t.wall_time_ms, 7);
}

TEST(RunStandardCot, OneUncappedCallWithDocumentsInlined) {
  Replay r;
  Pipeline p({}, r.backend, clai::testing::ticking_clock());
  const auto q = by_id("r03");
  const auto t = p.run_standard_cot(q);
  ASSERT_EQ(t.stages.size(), 1u);
  EXPECT_EQ(t.stages[0].stage, Stage::single_pass);
  EXPECT_FALSE(t.stages[0].max_tokens.has_value());
  for (const auto& d : *q.documents) EXPECT_NE(t.stages[0].rendered_prompt.find(d.text), std::string::npos);
  EXPECT_TRUE(t.stages[0].rendered_prompt.ends_with("Let's think step by step."));
  EXPECT_EQ(t.total_usage, t.stages[0].usage);
  EXPECT_EQ(t.total_usage.source, UsageSource::backend_reported);
  EXPECT_EQ(t.mode, PipelineMode::standard_cot);
}

TEST(RunStandardCot, TemperatureZero) {
  LambdaBackend b([](const gateway::ChatRequest&) { return clai::testing::reply("4"); });
  Pipeline p({}, b);
  p.run_standard_cot({"q", "What is 2+2?", std::nullopt});
  EXPECT_EQ(b.requests()[0].temperature, 0.0);
  EXPECT_EQ(b.requests()[0].user, "What is 2+2?\n\nLet's think step by step.");
}

TEST(RunTuned, DecomposedPlanPayload) {
  Replay r;
  Pipeline p({}, r.backend, clai::testing::ticking_clock());
  const auto t = p.run_tuned(by_id("p06"));
  ASSERT_TRUE(t.decomposed_plan.has_value());
  EXPECT_EQ(t.decomposed_plan->plan.size(), 3u);
  EXPECT_FALSE(t.reasoning.has_value());
  EXPECT_FALSE(t.degraded);
  EXPECT_EQ(t.stages[0].rendered_prompt.rfind("### Instruction:\n", 0), 0u);
}

TEST(RunTuned, DirectAnswerPayload) {
  Replay r;
  Pipeline p({}, r.backend, clai::testing::ticking_clock());
  const auto t = p.run_tuned(by_id("p02"));
  EXPECT_FALSE(t.decomposed_plan.has_value());
  EXPECT_EQ(t.final_answer, "4");
  LambdaBackend plain([](const gateway::ChatRequest&) { return clai::testing::reply("  The answer is 4.  "); });
  Pipeline q({}, plain);
  EXPECT_EQ(q.run_tuned({"q", "What is 2+2?", std::nullopt}).final_answer, "The answer is 4.");
}

TEST(RunTuned, MalformedPlanSurfacesSchemaMismatchAndKeepsRawText) {
  Replay r;
  Pipeline p({}, r.backend, clai::testing::ticking_clock());
  const auto t = p.run_tuned(by_id("r08"));
  EXPECT_TRUE(t.degraded);
  ASSERT_EQ(t.issues.size(), 1u);
  EXPECT_NE(t.issues[0].find("SchemaMismatch"), std::string::npos);
  EXPECT_EQ(t.final_answer, trim(t.stages[0].raw_response));
}

TEST(RunTuned, RagInputBlock) {
  LambdaBackend b([](const gateway::ChatRequest&) { return clai::testing::reply("Titan"); });
  Pipeline p({}, b);
  p.run_tuned({"q", "Which moon?", std::vector<Document>{{"s", "Titan is large.", {}}}});
  EXPECT_EQ(b.requests()[0].user,
            "### Instruction:\nWhich moon?\n\n### Input:\n--- doc:s ---\nTitan is large.\n\n### Response:\n");
}

TEST(OneShot, BuildsBackendFromConfig) {
  PipelineConfig cfg;
  cfg.backend.replay_store = clai::testing::fixture("pipeline/replay.jsonl");
  const auto t = run_standard_cot(by_id("p02"), cfg);
  EXPECT_EQ(t.stages.size(), 1u);
  cfg.backend.replay_store = clai::testing::fixture("absent.jsonl");
  EXPECT_THROW(run_standard_cot(by_id("p02"), cfg), Error);
}
