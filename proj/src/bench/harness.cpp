#include "clai/bench/harness.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include "clai/bench/metrics.hpp"
#include "clai/core/codec.hpp"

namespace clai::bench {
namespace {

std::string file_stem_for(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

std::string fmt1(double x) { return fmt::format("{:.1f}", round1(x)); }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

std::string md_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out.push_back(' ');
    else out.push_back(c);
  }
  return out;
}

template <typename T>
std::string opt1(const std::optional<T>& v) {
  return v ? fmt1(*v) : std::string();
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::cot: return "cot";
    case Method::clai_prompt: return "clai-prompt";
    case Method::clai_tune: return "clai-tune";
  }
  return "cot";
}

Method parse_method(std::string_view s) {
  const auto t = trim(s);
  if (t == "cot") return Method::cot;
  if (t == "clai-prompt") return Method::clai_prompt;
  if (t == "clai-tune") return Method::clai_tune;
  fail(ErrorKind::ConfigError, fmt::format("unknown method '{}' (expected cot, clai-prompt or clai-tune)", t));
}

std::vector<Method> parse_methods(std::string_view csv) {
  std::vector<Method> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    auto end = csv.find(',', pos);
    if (end == std::string_view::npos) end = csv.size();
    const auto m = parse_method(csv.substr(pos, end - pos));
    if (std::find(out.begin(), out.end(), m) != out.end())
      fail(ErrorKind::ConfigError, fmt::format("method '{}' listed twice", to_string(m)));
    out.push_back(m);
    pos = end + 1;
  }
  return out;
}

PipelineMode to_mode(Method m) noexcept {
  switch (m) {
    case Method::cot: return PipelineMode::standard_cot;
    case Method::clai_prompt: return PipelineMode::clai_prompt;
    case Method::clai_tune: return PipelineMode::clai_tune;
  }
  return PipelineMode::standard_cot;
}

ReportFormat parse_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "md" || s == "markdown") return ReportFormat::markdown;
  fail(ErrorKind::ConfigError, fmt::format("unknown report format '{}' (expected csv or md)", s));
}

BenchResult run_benchmark(const std::vector<TaskRecord>& tasks, pipeline::Pipeline& pipeline, const BenchConfig& cfg) {
  require(!tasks.empty(), "benchmark needs at least one task");
  if (cfg.methods.empty()) fail(ErrorKind::ConfigError, "no methods selected");
  const bool has_cot = std::find(cfg.methods.begin(), cfg.methods.end(), Method::cot) != cfg.methods.end();
  if (cfg.reduction && !has_cot)
    fail(ErrorKind::ConfigError, "token reduction needs the cot baseline among the methods");

  const std::size_t jobs = cfg.methods.size() * tasks.size();
  std::vector<TaskOutcome> outcomes(jobs);
  std::vector<std::optional<PipelineTranscript>> transcripts(jobs);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      const auto method = cfg.methods[i / tasks.size()];
      const auto& task = tasks[i % tasks.size()];
      TaskOutcome& o = outcomes[i];
      o.task_id = task.id;
      o.benchmark = task.benchmark;
      o.method = method;

      std::optional<PipelineTranscript> t;
      try {
        t = pipeline.run(to_query(task), to_mode(method));
      } catch (const pipeline::PipelineError& e) {
        o.error = e.what();
        t = e.partial();
      } catch (const Error& e) {
        o.error = e.what();
      }
      if (o.error) spdlog::warn("task {} ({}) failed: {}", task.id, to_string(method), *o.error);

      if (t) {
        o.completion_tokens = t->total_usage.completion_tokens;
        o.latency_ms = t->wall_time_ms;
        if (t->pruned_context) {
          o.context_input_tokens = t->pruned_context->input_token_count;
          o.context_output_tokens = t->pruned_context->output_token_count;
        }
        if (!o.error) {
          const bool numeric = parse_number(task.gold_answer).has_value();
          try {
            o.prediction = extract_final_answer(t->final_answer, numeric);
          } catch (const Error&) {
            o.prediction.clear();
          }
          o.correct = !o.prediction.empty() && score_exact(o.prediction, task.gold_answer);
        }
      }
      if (task.documents && !task.documents->empty()) o.f1 = o.prediction.empty() ? 0.0 : score_f1(o.prediction, task.gold_answer);
      transcripts[i] = std::move(t);
    }
  };

  const int workers = std::max(1, std::min<int>(cfg.parallel, static_cast<int>(jobs)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  if (cfg.transcripts_dir) {
    for (std::size_t i = 0; i < jobs; ++i) {
      if (!transcripts[i]) continue;
      const auto dir = *cfg.transcripts_dir / std::string(to_string(outcomes[i].method));
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      const auto path = dir / (file_stem_for(outcomes[i].task_id) + ".json");
      std::ofstream out(path);
      out << encode(*transcripts[i]) << '\n';
      if (!out) fail(ErrorKind::StorageError, "cannot write transcript " + path.string());
    }
  }

  BenchResult result;
  result.rows = aggregate(tasks, outcomes, cfg.methods, cfg.reduction);
  for (const auto& row : result.rows) {
    const auto it = cfg.quality_thresholds.find(row.benchmark);
    if (it == cfg.quality_thresholds.end()) continue;
    const double quality = row.f1_pct.value_or(row.accuracy_pct);
    if (quality < it->second) {
      result.quality_failures.push_back(
          fmt::format("{}/{}: quality {} below threshold {}", row.benchmark, row.method, fmt1(quality), fmt1(it->second)));
    }
  }
  result.outcomes = std::move(outcomes);
  return result;
}

std::vector<ReportRow> aggregate(const std::vector<TaskRecord>& tasks, const std::vector<TaskOutcome>& outcomes,
                                 const std::vector<Method>& methods, bool reduction) {
  std::vector<std::string> benchmarks;
  std::set<std::string> rag_benchmarks;
  for (const auto& t : tasks) {
    if (std::find(benchmarks.begin(), benchmarks.end(), t.benchmark) == benchmarks.end())
      benchmarks.push_back(t.benchmark);
    if (t.documents && !t.documents->empty()) rag_benchmarks.insert(t.benchmark);
  }

  std::vector<ReportRow> rows;
  for (const auto& bench : benchmarks) {
    std::optional<double> baseline;
    const std::size_t first = rows.size();
    for (const auto m : methods) {
      ReportRow row;
      row.benchmark = bench;
      row.method = std::string(to_string(m));
      double correct = 0, f1 = 0, tokens = 0, latency = 0;
      std::int64_t ctx_in = 0, ctx_out = 0;
      bool has_ctx = false;
      for (const auto& o : outcomes) {
        if (o.benchmark != bench || o.method != m) continue;
        ++row.n;
        correct += o.correct ? 1 : 0;
        f1 += o.f1.value_or(0.0);
        tokens += static_cast<double>(o.completion_tokens);
        latency += static_cast<double>(o.latency_ms);
        if (o.context_input_tokens && o.context_output_tokens) {
          has_ctx = true;
          ctx_in += *o.context_input_tokens;
          ctx_out += *o.context_output_tokens;
        }
      }
      if (row.n == 0) continue;
      const auto n = static_cast<double>(row.n);
      row.accuracy_pct = 100.0 * correct / n;
      row.avg_tokens = tokens / n;
      row.avg_latency_ms = latency / n;
      if (rag_benchmarks.count(bench)) {
        row.f1_pct = 100.0 * f1 / n;
        if (!has_ctx) {
          row.compression_ratio = 1.0;
        } else {
          try {
            row.compression_ratio =
                compression_ratio(static_cast<double>(ctx_in), static_cast<double>(ctx_out));
          } catch (const Error& e) {
            spdlog::warn("{}/{}: {}", bench, row.method, e.what());
          }
        }
      }
      if (m == Method::cot) baseline = row.avg_tokens;
      rows.push_back(std::move(row));
    }
    if (!reduction || !baseline) continue;
    for (std::size_t i = first; i < rows.size(); ++i) {
      if (rows[i].method == to_string(Method::cot)) continue;
      try {
        rows[i].token_reduction_pct = token_reduction(*baseline, rows[i].avg_tokens);
      } catch (const Error& e) {
        spdlog::warn("{}/{}: {}", bench, rows[i].method, e.what());
      }
    }
  }
  return rows;
}

std::string emit_report(const std::vector<ReportRow>& rows, ReportFormat format) {
  require(!rows.empty(), "report needs at least one row");
  std::string out;
  if (format == ReportFormat::csv) {
    out += kCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", csv_field(r.benchmark), csv_field(r.method), r.n,
                         fmt1(r.accuracy_pct), opt1(r.f1_pct), fmt1(r.avg_tokens), opt1(r.token_reduction_pct),
                         fmt1(r.avg_latency_ms), opt1(r.compression_ratio));
    }
    return out;
  }

  std::map<std::string, double> best;
  for (const auto& r : rows) {
    const double a = round1(r.accuracy_pct);
    auto [it, fresh] = best.emplace(r.benchmark, a);
    if (!fresh) it->second = std::max(it->second, a);
  }
  out +=
      "| Benchmark | Method | Accuracy/Score (%) | Avg. Tokens | Token Reduction (%) | Latency (ms/problem) | F1 (%) "
      "| Compression Ratio | N |\n";
  out += "|---|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    std::string acc = fmt1(r.accuracy_pct);
    if (round1(r.accuracy_pct) == best[r.benchmark]) acc = "**" + acc + "**";
    out += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n", md_cell(r.benchmark), md_cell(r.method), acc,
                       fmt1(r.avg_tokens), opt1(r.token_reduction_pct), fmt1(r.avg_latency_ms), opt1(r.f1_pct),
                       r.compression_ratio ? fmt1(*r.compression_ratio) + "x" : std::string(), r.n);
  }
  return out;
}

}  // namespace clai::bench
