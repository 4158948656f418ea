#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace clai {

enum class ErrorKind {
  InvalidQuery,
  InvalidScore,
  PreconditionViolation,
  TemplateError,
  NotApplicable,
  NoJsonFound,
  SchemaMismatch,
  PlanInvalid,
  MissingFinalAnswer,
  Timeout,
  RateLimited,
  BackendError,
  AuthMissing,
  StorageError,
  ParseError,
  TeacherFailure,
  ValidationFailure,
  PlanUnrecoverable,
  NoAnswer,
  ZeroBaseline,
  ZeroPruned,
  ConfigError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure surfaced by the library is an Error carrying a kind; callers
// branch on kind() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  static Error backend(int status, const std::string& body);
  static Error parse(std::size_t line, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // HTTP status for BackendError raised from a live response.
  std::optional<int> http_status() const noexcept { return http_status_; }
  // 1-based line number for ParseError raised while reading JSONL.
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<int> http_status_;
  std::optional<std::size_t> line_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::PreconditionViolation, message);
}

}  // namespace clai
