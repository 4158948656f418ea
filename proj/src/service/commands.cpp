#include "clai/service/commands.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <ostream>
#include <sstream>

#include "clai/bench/harness.hpp"
#include "clai/core/codec.hpp"
#include "clai/datagen/datagen.hpp"
#include "clai/service/config.hpp"
#include "clai/service/proxy.hpp"

namespace clai::service {
namespace {

struct UsageError {
  std::string message;
};

void require_file(const std::filesystem::path& p, std::string_view what) {
  if (!std::filesystem::is_regular_file(p)) throw UsageError{fmt::format("{} not found: {}", what, p.string())};
}

AppConfig resolve_config(const std::optional<std::filesystem::path>& path) {
  if (!path) return {};
  require_file(*path, "config file");
  return load_config(*path);
}

template <typename Fn>
int guarded(std::ostream& err, Fn fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    err << "usage error: " << e.message << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::trunc);
  f << content;
  f.flush();
  if (!f) fail(ErrorKind::StorageError, "cannot write " + path.string());
}

std::atomic<ProxyService*> g_serving{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_serving.load()) s->stop();
}

}  // namespace

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::StorageError, "cannot read documents from " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  if (text[first] == '[') return decode<std::vector<Document>>(text);

  std::vector<Document> docs;
  std::istringstream lines(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      docs.push_back(decode<Document>(line));
    } catch (const Error& e) {
      throw Error::parse(n, e.what());
    }
  }
  return docs;
}

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const PipelineMode mode = [&] {
      if (o.mode == "clai-prompt") return PipelineMode::clai_prompt;
      if (o.mode == "clai-tune") return PipelineMode::clai_tune;
      if (o.mode == "cot") return PipelineMode::standard_cot;
      throw UsageError{"--mode must be one of clai-prompt, clai-tune, cot"};
    }();
    if (trim(o.query).empty()) throw UsageError{"--query must not be empty"};
    Query q{o.query_id, o.query, std::nullopt};
    if (o.docs) {
      require_file(*o.docs, "documents file");
      q.documents = load_documents(*o.docs);
    }
    const auto cfg = resolve_config(o.config);
    auto backend = gateway::make_backend(cfg.pipeline.backend);
    pipeline::Pipeline p(cfg.pipeline, *backend);

    PipelineTranscript t;
    try {
      t = p.run(q, mode);
    } catch (const pipeline::PipelineError& e) {
      if (o.out) write_file(*o.out, encode(e.partial()) + "\n");
      throw;
    }
    if (o.out) write_file(*o.out, encode(t) + "\n");
    out << t.final_answer << '\n';
    fmt::print(out, "tokens: prompt={} completion={} total={} stages={}{}\n", t.total_usage.prompt_tokens,
               t.total_usage.completion_tokens, t.total_usage.total(), t.stages.size(),
               t.degraded ? " (degraded)" : "");
    return kExitOk;
  });
}

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_file(o.tasks, "task file");
    if (o.parallel < 1) throw UsageError{"--parallel must be >= 1"};
    const auto format = bench::parse_format(o.format);
    const auto cfg = resolve_config(o.config);

    bench::BenchConfig bc;
    bc.methods = bench::parse_methods(o.methods);
    bc.reduction = o.reduction;
    bc.parallel = o.parallel;
    bc.transcripts_dir = o.transcripts;
    bc.quality_thresholds = cfg.quality_thresholds;
    const auto tasks = bench::load_tasks(o.tasks);
    if (tasks.empty()) throw UsageError{"task file has no tasks: " + o.tasks.string()};
    if (bc.reduction && std::find(bc.methods.begin(), bc.methods.end(), bench::Method::cot) == bc.methods.end())
      fail(ErrorKind::ConfigError, "token reduction needs the cot baseline; add cot to --methods or pass --no-reduction");

    auto backend = gateway::make_backend(cfg.pipeline.backend);
    pipeline::Pipeline p(cfg.pipeline, *backend);
    const auto result = bench::run_benchmark(tasks, p, bc);
    const auto report = bench::emit_report(result.rows, format);
    if (o.out) write_file(*o.out, report);
    else out << report;

    std::size_t failed = 0;
    for (const auto& oc : result.outcomes) failed += oc.error ? 1 : 0;
    if (failed) err << failed << " task run(s) failed and were scored as incorrect\n";
    for (const auto& q : result.quality_failures) err << "quality gate: " << q << '\n';
    return kExitOk;
  });
}

int cmd_datagen(const DatagenOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_file(o.seeds, "seed file");
    if (o.workers < 1) throw UsageError{"--workers must be >= 1"};
    const auto seeds = bench::load_tasks(o.seeds);
    if (seeds.empty()) throw UsageError{"seed file has no seeds: " + o.seeds.string()};
    const auto cfg = resolve_config(o.teacher_config);
    auto backend = gateway::make_backend(cfg.pipeline.backend);
    pipeline::Pipeline teacher(cfg.pipeline, *backend);

    datagen::DatagenOptions options;
    options.workers = o.workers;
    const auto report = datagen::generate_dataset(seeds, teacher, options);
    datagen::write_jsonl(report.samples, o.out);

    auto count = [&](complexity::Tier t) {
      const auto it = report.histogram.find(t);
      return it == report.histogram.end() ? std::size_t{0} : it->second;
    };
    fmt::print(out, "low: {}\nmedium: {}\nhigh: {}\n", count(complexity::Tier::Low), count(complexity::Tier::Medium),
               count(complexity::Tier::High));
    fmt::print(out, "written: {}\nrejected: {}\nduplicates: {}\n", report.samples.size(), report.failures.size(),
               report.duplicates);
    if (!report.failures.empty()) {
      std::size_t validation = 0;
      for (const auto& f : report.failures) {
        validation += f.kind == ErrorKind::ValidationFailure ? 1 : 0;
        err << "seed " << f.seed_id << ": " << f.message << '\n';
      }
      fmt::print(err, "{} seed(s) failed ({} ValidationFailure)\n", report.failures.size(), validation);
      return kExitFailure;
    }
    return kExitOk;
  });
}

int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.port < 0 || o.port > 65535) throw UsageError{"--port must be in [0, 65535]"};
    const auto cfg = resolve_config(o.config);
    ProxyService service(cfg.pipeline, gateway::make_backend(cfg.pipeline.backend));
    const int port = service.bind(o.host, o.port);
    fmt::print(out, "listening on {}:{}\n", o.host, port);
    out.flush();
    g_serving = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.listen();
    g_serving = nullptr;
    return kExitOk;
  });
}

}  // namespace clai::service
