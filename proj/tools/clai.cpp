#include <CLI11.hpp>

#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "clai/service/commands.hpp"

namespace svc = clai::service;

int main(int argc, char** argv) {
  CLI::App app{"Cognitive-load-aware inference: prompt pipeline, benchmark harness, data generation and proxy"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging on stderr");

  svc::RunOptions run;
  std::string docs, run_config, run_out;
  auto* run_cmd = app.add_subcommand("run", "Answer one query");
  run_cmd->add_option("--mode", run.mode, "clai-prompt, clai-tune or cot")
      ->required()
      ->check(CLI::IsMember({"clai-prompt", "clai-tune", "cot"}));
  run_cmd->add_option("--query", run.query, "Query text")->required();
  run_cmd->add_option("--id", run.query_id, "Query id recorded in the transcript");
  run_cmd->add_option("--docs", docs, "Documents as a JSON array or JSONL");
  run_cmd->add_option("--config", run_config, "Config file");
  run_cmd->add_option("--out", run_out, "Write the transcript JSON here");

  svc::BenchOptions bench;
  std::string tasks, bench_config, bench_out, transcripts;
  bool no_reduction = false;
  auto* bench_cmd = app.add_subcommand("bench", "Run methods over a task file and print a report");
  bench_cmd->add_option("--tasks", tasks, "Task file (JSONL)")->required();
  bench_cmd->add_option("--methods", bench.methods, "Comma-separated: cot, clai-prompt, clai-tune")
      ->capture_default_str();
  bench_cmd->add_option("--format", bench.format, "csv or md")->capture_default_str();
  bench_cmd->add_option("--parallel", bench.parallel, "Worker threads")->capture_default_str();
  bench_cmd->add_flag("--no-reduction", no_reduction, "Skip token reduction against cot");
  bench_cmd->add_option("--config", bench_config, "Config file");
  bench_cmd->add_option("--out", bench_out, "Write the report here instead of stdout");
  bench_cmd->add_option("--transcripts", transcripts, "Directory for per-task transcripts");

  svc::DatagenOptions gen;
  std::string seeds, gen_out, teacher_config;
  auto* gen_cmd = app.add_subcommand("datagen", "Generate instruction-tuning samples from seed tasks");
  gen_cmd->add_option("--seeds", seeds, "Seed task file (JSONL)")->required();
  gen_cmd->add_option("--out", gen_out, "Output JSONL")->required();
  gen_cmd->add_option("--teacher-config", teacher_config, "Config file for the teacher");
  gen_cmd->add_option("--workers", gen.workers, "Worker threads")->capture_default_str();

  svc::ServeOptions serve;
  std::string serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "Run the chat-completions proxy");
  serve_cmd->add_option("--config", serve_config, "Config file");
  serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? svc::kExitOk : svc::kExitUsage;
  }

  auto logger = spdlog::stderr_color_mt("clai");
  spdlog::set_default_logger(logger);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  auto opt_path = [](const std::string& s) -> std::optional<std::filesystem::path> {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
  };

  if (*run_cmd) {
    run.docs = opt_path(docs);
    run.config = opt_path(run_config);
    run.out = opt_path(run_out);
    return svc::cmd_run(run, std::cout, std::cerr);
  }
  if (*bench_cmd) {
    bench.tasks = tasks;
    bench.reduction = !no_reduction;
    bench.config = opt_path(bench_config);
    bench.out = opt_path(bench_out);
    bench.transcripts = opt_path(transcripts);
    return svc::cmd_bench(bench, std::cout, std::cerr);
  }
  if (*gen_cmd) {
    gen.seeds = seeds;
    gen.out = gen_out;
    gen.teacher_config = opt_path(teacher_config);
    return svc::cmd_datagen(gen, std::cout, std::cerr);
  }
  serve.config = opt_path(serve_config);
  return svc::cmd_serve(serve, std::cout, std::cerr);
}
