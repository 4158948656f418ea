#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "clai/gateway/chat.hpp"

namespace clai::gateway {

// POST {base_url}/v1/chat/completions with bearer auth.
//
// Timeouts, 429 and 5xx are retried with exponential backoff
// (retry_base_delay_ms * 2^k) up to max_retries times; every other failure is
// returned immediately. 401 maps to AuthMissing. Missing usage in the reply is
// replaced by estimate_tokens() and flagged as estimated.
class HttpBackend final : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;
  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  explicit HttpBackend(BackendConfig cfg, Sleeper sleeper = {}, EnvLookup env = {});

  ChatResponse complete(const ChatRequest& req) override;

  // Total HTTP attempts made so far, across all calls.
  std::size_t attempts() const noexcept { return attempts_.load(); }

 private:
  BackendConfig cfg_;
  Sleeper sleep_;
  EnvLookup env_;
  std::string origin_;
  std::string path_;
  std::atomic<std::size_t> attempts_{0};
};

// One JSONL line of the fixture store.
struct FixtureRecord {
  std::string digest;
  std::string response_text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::optional<std::string> finish_reason;

  bool operator==(const FixtureRecord&) const = default;
};

std::string encode_fixture(const FixtureRecord& r);
FixtureRecord decode_fixture(std::string_view line);

// Reads a fixture store. A missing file is a StorageError; a bad line is a
// ParseError carrying its line number. Later duplicates of a digest are
// ignored.
std::map<std::string, FixtureRecord> load_fixture_store(const std::filesystem::path& path);

// Serves responses from a fixture store keyed by request_digest(). Unknown
// requests fail with BackendError (status 404).
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(const std::filesystem::path& store);
  explicit ReplayBackend(std::map<std::string, FixtureRecord> records);

  ChatResponse complete(const ChatRequest& req) override;

  std::size_t size() const noexcept { return records_.size(); }
  std::size_t hits() const noexcept { return hits_.load(); }

 private:
  std::map<std::string, FixtureRecord> records_;
  std::atomic<std::size_t> hits_{0};
};

// Forwards to an inner backend and appends each new (digest, response) pair
// to a fixture store. Identical requests are stored once.
class RecordingBackend final : public Backend {
 public:
  RecordingBackend(std::unique_ptr<Backend> inner, const std::filesystem::path& store);

  ChatResponse complete(const ChatRequest& req) override;

  std::size_t recorded() const;

 private:
  std::unique_ptr<Backend> inner_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::map<std::string, bool> seen_;
};

// Caps the number of concurrent calls into the wrapped backend.
class LimitedBackend final : public Backend {
 public:
  LimitedBackend(std::unique_ptr<Backend> inner, int max_concurrent);

  ChatResponse complete(const ChatRequest& req) override;

 private:
  std::unique_ptr<Backend> inner_;
  int max_;
  int in_flight_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

// RecordingBackend over a non-owned backend; for tests and tools.
std::unique_ptr<Backend> record_mode(Backend& inner, const std::filesystem::path& store);

}  // namespace clai::gateway
