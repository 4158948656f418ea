#include "clai/gateway/chat.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "clai/core/codec.hpp"
#include "clai/gateway/backends.hpp"

namespace clai::gateway {

ValidationResult validate_backend_config(const BackendConfig& cfg) {
  ValidationResult r;
  if (cfg.timeout_ms <= 0) r.violations.push_back("timeout_ms must be positive");
  if (cfg.max_retries < 0) r.violations.push_back("max_retries must be >= 0");
  if (cfg.retry_base_delay_ms < 0) r.violations.push_back("retry_base_delay_ms must be >= 0");
  if (cfg.max_concurrent < 0) r.violations.push_back("max_concurrent must be >= 0");
  if (cfg.kind == BackendKind::http && cfg.base_url.empty()) r.violations.push_back("http backend needs base_url");
  if (cfg.kind == BackendKind::replay && cfg.replay_store.empty())
    r.violations.push_back("replay backend needs replay_store");
  return r;
}

Endpoint chat_endpoint(const std::string& base_url) {
  const auto scheme = base_url.find("://");
  if (scheme == std::string::npos) fail(ErrorKind::ConfigError, "base_url needs a scheme: " + base_url);
  const auto slash = base_url.find('/', scheme + 3);
  Endpoint e;
  e.origin = base_url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : base_url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  e.path = prefix + "/v1/chat/completions";
  return e;
}

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::string request_digest(const ChatRequest& req) {
  json j = json::object();
  j["model"] = req.model;
  j["system"] = req.system ? json(*req.system) : json(nullptr);
  j["user"] = req.user;
  j["temperature"] = req.temperature;
  j["max_tokens"] = req.max_tokens ? json(*req.max_tokens) : json(nullptr);
  const std::string canonical = dump_canonical(j);

  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::StorageError, "sha256 failed");
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

bool hit_token_cap(const ChatResponse& resp, const ChatRequest& req) {
  if (resp.finish_reason && *resp.finish_reason == "length") return true;
  return req.max_tokens && resp.usage.completion_tokens >= *req.max_tokens;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
  if (auto v = validate_backend_config(cfg); !v) fail(ErrorKind::ConfigError, v.violations.front());
  std::unique_ptr<Backend> b;
  if (cfg.kind == BackendKind::http) {
    b = std::make_unique<HttpBackend>(cfg);
  } else {
    b = std::make_unique<ReplayBackend>(cfg.replay_store);
  }
  if (cfg.record_store) b = std::make_unique<RecordingBackend>(std::move(b), *cfg.record_store);
  if (cfg.max_concurrent > 0) b = std::make_unique<LimitedBackend>(std::move(b), cfg.max_concurrent);
  return b;
}

ChatResponse complete(const ChatRequest& req, const BackendConfig& cfg) {
  return make_backend(cfg)->complete(req);
}

}  // namespace clai::gateway
