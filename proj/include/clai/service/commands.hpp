#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "clai/core/types.hpp"

// Implementations behind the `clai` subcommands. Each returns the process
// exit code: 0 success, 1 usage error (bad flags, missing input files),
// 2 typed failure from the library.
namespace clai::service {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

struct RunOptions {
  std::string mode;  // clai-prompt | clai-tune | cot
  std::string query;
  std::string query_id = "cli";
  std::optional<std::filesystem::path> docs;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
};

struct BenchOptions {
  std::filesystem::path tasks;
  std::string methods = "cot,clai-prompt";
  std::string format = "csv";
  int parallel = 1;
  bool reduction = true;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> transcripts;
};

struct DatagenOptions {
  std::filesystem::path seeds;
  std::filesystem::path out;
  std::optional<std::filesystem::path> teacher_config;
  int workers = 1;
};

struct ServeOptions {
  std::optional<std::filesystem::path> config;
  std::string host = "127.0.0.1";
  int port = 8080;
};

// Documents from a JSON array or from JSONL, one Document per line.
std::vector<Document> load_documents(const std::filesystem::path& path);

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err);
int cmd_datagen(const DatagenOptions& o, std::ostream& out, std::ostream& err);
int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err);

}  // namespace clai::service
