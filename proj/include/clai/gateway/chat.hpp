#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "clai/core/types.hpp"

namespace clai::gateway {

struct ChatRequest {
  std::string model;
  std::optional<std::string> system;
  std::string user;
  // Greedy decoding by default.
  double temperature = 0.0;
  std::optional<std::int64_t> max_tokens;

  bool operator==(const ChatRequest&) const = default;
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  std::string model;
  std::int64_t latency_ms = 0;
  // "stop", "length", ... when the backend reports one.
  std::optional<std::string> finish_reason;
  int retries = 0;
};

enum class BackendKind { http, replay };

struct BackendConfig {
  BackendKind kind = BackendKind::replay;
  std::string base_url = "http://127.0.0.1:8080";
  // Name of the environment variable holding the API key.
  std::string api_key_env = "CLAI_API_KEY";
  std::int64_t timeout_ms = 60'000;
  int max_retries = 2;
  std::int64_t retry_base_delay_ms = 500;
  // Upper bound on in-flight requests per backend; 0 disables the cap.
  int max_concurrent = 4;
  // Fixture store read by the replay backend.
  std::filesystem::path replay_store;
  // When set, live responses are also recorded to this store.
  std::optional<std::filesystem::path> record_store;
};

ValidationResult validate_backend_config(const BackendConfig& cfg);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
};

// "https://host:port/prefix" -> origin "https://host:port" and path
// "/prefix/v1/chat/completions". Throws ConfigError without a scheme.
struct Endpoint {
  std::string origin;
  std::string path;
};
Endpoint chat_endpoint(const std::string& base_url);

// ceil(bytes / 4).
std::int64_t estimate_tokens(std::string_view text);

// SHA-256 (hex) of the canonical JSON of (model, system, user, temperature,
// max_tokens). Stable across runs and platforms.
std::string request_digest(const ChatRequest& req);

// True when the response hit its generation cap.
bool hit_token_cap(const ChatResponse& resp, const ChatRequest& req);

// Builds the backend described by cfg: HTTP or replay, optionally recording,
// behind the concurrency cap.
std::unique_ptr<Backend> make_backend(const BackendConfig& cfg);

// One-shot convenience over make_backend.
ChatResponse complete(const ChatRequest& req, const BackendConfig& cfg);

}  // namespace clai::gateway
