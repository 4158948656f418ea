#include <fstream>

#include "clai/core/codec.hpp"
#include "clai/gateway/backends.hpp"

namespace clai::gateway {

std::string encode_fixture(const FixtureRecord& r) {
  json j = json::object();
  j["digest"] = r.digest;
  j["response_text"] = r.response_text;
  j["prompt_tokens"] = r.prompt_tokens;
  j["completion_tokens"] = r.completion_tokens;
  if (r.finish_reason) j["finish_reason"] = *r.finish_reason;
  return dump_canonical(j);
}

FixtureRecord decode_fixture(std::string_view line) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorKind::SchemaMismatch, "fixture line is not a JSON object");
  FixtureRecord r;
  try {
    r.digest = j.at("digest").get<std::string>();
    r.response_text = j.at("response_text").get<std::string>();
    r.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
    r.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
    if (auto f = j.find("finish_reason"); f != j.end() && !f->is_null()) r.finish_reason = f->get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaMismatch, e.what());
  }
  if (r.prompt_tokens < 0 || r.completion_tokens < 0) fail(ErrorKind::SchemaMismatch, "negative token count");
  return r;
}

std::map<std::string, FixtureRecord> load_fixture_store(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::StorageError, "cannot open fixture store " + path.string());
  std::map<std::string, FixtureRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      auto r = decode_fixture(line);
      out.emplace(r.digest, std::move(r));
    } catch (const Error& e) {
      throw Error::parse(n, std::string(path.string()) + ": " + e.what());
    }
  }
  return out;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& store) : records_(load_fixture_store(store)) {}

ReplayBackend::ReplayBackend(std::map<std::string, FixtureRecord> records) : records_(std::move(records)) {}

ChatResponse ReplayBackend::complete(const ChatRequest& req) {
  const std::string digest = request_digest(req);
  const auto it = records_.find(digest);
  if (it == records_.end()) throw Error::backend(404, "no replay fixture for request digest " + digest);
  ++hits_;
  ChatResponse out;
  out.text = it->second.response_text;
  out.usage = {it->second.prompt_tokens, it->second.completion_tokens, UsageSource::backend_reported};
  out.model = req.model;
  out.finish_reason = it->second.finish_reason;
  return out;
}

RecordingBackend::RecordingBackend(std::unique_ptr<Backend> inner, const std::filesystem::path& store)
    : inner_(std::move(inner)) {
  if (std::filesystem::exists(store)) {
    for (auto& [digest, _] : load_fixture_store(store)) seen_.emplace(digest, false);
  }
  out_.open(store, std::ios::app);
  if (!out_) fail(ErrorKind::StorageError, "cannot write fixture store " + store.string());
}

ChatResponse RecordingBackend::complete(const ChatRequest& req) {
  ChatResponse resp = inner_->complete(req);
  const std::string digest = request_digest(req);
  std::lock_guard lock(mu_);
  if (seen_.emplace(digest, true).second) {
    FixtureRecord r{digest, resp.text, resp.usage.prompt_tokens, resp.usage.completion_tokens, resp.finish_reason};
    out_ << encode_fixture(r) << '\n';
    out_.flush();
    if (!out_) fail(ErrorKind::StorageError, "write to fixture store failed");
  }
  return resp;
}

std::size_t RecordingBackend::recorded() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, fresh] : seen_) n += fresh ? 1 : 0;
  return n;
}

LimitedBackend::LimitedBackend(std::unique_ptr<Backend> inner, int max_concurrent)
    : inner_(std::move(inner)), max_(max_concurrent) {
  require(max_ >= 1, "max_concurrent must be >= 1");
}

ChatResponse LimitedBackend::complete(const ChatRequest& req) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < max_; });
    ++in_flight_;
  }
  struct Release {
    LimitedBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  return inner_->complete(req);
}

namespace {

class BorrowedBackend final : public Backend {
 public:
  explicit BorrowedBackend(Backend& inner) : inner_(inner) {}
  ChatResponse complete(const ChatRequest& req) override { return inner_.complete(req); }

 private:
  Backend& inner_;
};

}  // namespace

std::unique_ptr<Backend> record_mode(Backend& inner, const std::filesystem::path& store) {
  return std::make_unique<RecordingBackend>(std::make_unique<BorrowedBackend>(inner), store);
}

}  // namespace clai::gateway
