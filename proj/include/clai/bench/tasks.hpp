#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clai/core/types.hpp"

namespace clai::bench {

struct TaskRecord {
  std::string id;
  std::string question;
  std::optional<std::vector<Document>> documents;
  std::string gold_answer;
  std::string benchmark;

  bool operator==(const TaskRecord&) const = default;
};

ValidationResult validate_task(const TaskRecord& t);

std::string encode_task(const TaskRecord& t);
TaskRecord decode_task(std::string_view line);

// One TaskRecord per line; blank lines are skipped. A malformed or invalid
// line, or a repeated id, is a ParseError carrying its line number.
std::vector<TaskRecord> load_tasks(const std::filesystem::path& path);

Query to_query(const TaskRecord& t);

}  // namespace clai::bench
