#include "clai/core/error.hpp"

#include <fmt/format.h>

namespace clai {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidQuery: return "InvalidQuery";
    case ErrorKind::InvalidScore: return "InvalidScore";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::TemplateError: return "TemplateError";
    case ErrorKind::NotApplicable: return "NotApplicable";
    case ErrorKind::NoJsonFound: return "NoJsonFound";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::PlanInvalid: return "PlanInvalid";
    case ErrorKind::MissingFinalAnswer: return "MissingFinalAnswer";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::BackendError: return "BackendError";
    case ErrorKind::AuthMissing: return "AuthMissing";
    case ErrorKind::StorageError: return "StorageError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::TeacherFailure: return "TeacherFailure";
    case ErrorKind::ValidationFailure: return "ValidationFailure";
    case ErrorKind::PlanUnrecoverable: return "PlanUnrecoverable";
    case ErrorKind::NoAnswer: return "NoAnswer";
    case ErrorKind::ZeroBaseline: return "ZeroBaseline";
    case ErrorKind::ZeroPruned: return "ZeroPruned";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(kind), message)), kind_(kind) {}

Error Error::backend(int status, const std::string& body) {
  Error e(ErrorKind::BackendError, fmt::format("HTTP {}: {}", status, body));
  e.http_status_ = status;
  return e;
}

Error Error::parse(std::size_t line, const std::string& message) {
  Error e(ErrorKind::ParseError, fmt::format("line {}: {}", line, message));
  e.line_ = line;
  return e;
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace clai
