#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clai/bench/tasks.hpp"
#include "clai/pipeline/pipeline.hpp"

namespace clai::bench {

enum class Method { cot, clai_prompt, clai_tune };

// "cot", "clai-prompt", "clai-tune"
std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view s);
// Comma-separated list; throws ConfigError on unknown or repeated names.
std::vector<Method> parse_methods(std::string_view csv);
PipelineMode to_mode(Method m) noexcept;

struct ReportRow {
  std::string benchmark;
  std::string method;
  std::int64_t n = 0;
  double accuracy_pct = 0;
  std::optional<double> f1_pct;
  double avg_tokens = 0;
  std::optional<double> token_reduction_pct;
  double avg_latency_ms = 0;
  std::optional<double> compression_ratio;

  bool operator==(const ReportRow&) const = default;
};

struct BenchConfig {
  std::vector<Method> methods{Method::cot, Method::clai_prompt};
  // Token reduction against the cot row; requires cot among the methods.
  bool reduction = true;
  int parallel = 1;
  // One JSON transcript per task under <dir>/<method>/ when set.
  std::optional<std::filesystem::path> transcripts_dir;
  // Minimum accuracy (or F1 where reported) per benchmark, in percent.
  std::map<std::string, double> quality_thresholds;
};

struct TaskOutcome {
  std::string task_id;
  std::string benchmark;
  Method method = Method::cot;
  std::string prediction;
  bool correct = false;
  std::optional<double> f1;
  std::int64_t completion_tokens = 0;
  std::int64_t latency_ms = 0;
  std::optional<std::int64_t> context_input_tokens;
  std::optional<std::int64_t> context_output_tokens;
  // Set when the run failed; the task then scores as incorrect.
  std::optional<std::string> error;
};

struct BenchResult {
  std::vector<ReportRow> rows;
  // Ordered by method, then task order in the input.
  std::vector<TaskOutcome> outcomes;
  // "benchmark/method: quality X below threshold Y" entries.
  std::vector<std::string> quality_failures;
};

// Runs every task under every method. Failed tasks stay in the denominator
// and keep whatever tokens they spent before failing. Throws ConfigError when
// reduction is requested without the cot baseline, PreconditionViolation on
// an empty task list.
BenchResult run_benchmark(const std::vector<TaskRecord>& tasks, pipeline::Pipeline& pipeline,
                          const BenchConfig& cfg);

// Folds outcomes into one row per (benchmark, method), benchmarks in order of
// first appearance.
std::vector<ReportRow> aggregate(const std::vector<TaskRecord>& tasks, const std::vector<TaskOutcome>& outcomes,
                                 const std::vector<Method>& methods, bool reduction);

enum class ReportFormat { csv, markdown };
ReportFormat parse_format(std::string_view s);

inline constexpr std::string_view kCsvHeader =
    "benchmark,method,n,accuracy_pct,f1_pct,avg_tokens,token_reduction_pct,avg_latency_ms,compression_ratio";

std::string emit_report(const std::vector<ReportRow>& rows, ReportFormat format);

}  // namespace clai::bench
