#include <httplib.h>

#include <cstdlib>
#include <thread>

#include <spdlog/spdlog.h>

#include "clai/core/codec.hpp"
#include "clai/gateway/backends.hpp"

namespace clai::gateway {
namespace {

std::optional<std::string> getenv_lookup(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

struct Attempt {
  std::optional<ChatResponse> response;
  std::optional<Error> error;
  bool retryable = false;
};

std::string body_excerpt(const std::string& body) {
  constexpr std::size_t kMax = 512;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

ChatResponse parse_completion(const std::string& body, const ChatRequest& req, int status) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error::backend(status, "malformed JSON response: " + body_excerpt(body));
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty() || !(*choices)[0].is_object())
    throw Error::backend(status, "response has no choices: " + body_excerpt(body));
  const auto& choice = (*choices)[0];

  ChatResponse out;
  if (auto m = choice.find("message"); m != choice.end() && m->is_object()) {
    if (auto c = m->find("content"); c != m->end() && c->is_string()) out.text = c->get<std::string>();
  } else if (auto t = choice.find("text"); t != choice.end() && t->is_string()) {
    out.text = t->get<std::string>();
  }
  if (auto f = choice.find("finish_reason"); f != choice.end() && f->is_string()) out.finish_reason = f->get<std::string>();
  const auto model = j.find("model");
  out.model = model != j.end() && model->is_string() ? model->get<std::string>() : req.model;

  const auto usage = j.find("usage");
  const bool has_usage = usage != j.end() && usage->is_object() && (*usage).contains("prompt_tokens") &&
                         (*usage)["prompt_tokens"].is_number_integer() && (*usage).contains("completion_tokens") &&
                         (*usage)["completion_tokens"].is_number_integer();
  if (has_usage) {
    out.usage.prompt_tokens = (*usage)["prompt_tokens"].get<std::int64_t>();
    out.usage.completion_tokens = (*usage)["completion_tokens"].get<std::int64_t>();
    out.usage.source = UsageSource::backend_reported;
  } else {
    std::string prompt = req.system.value_or("");
    prompt += req.user;
    out.usage.prompt_tokens = estimate_tokens(prompt);
    out.usage.completion_tokens = estimate_tokens(out.text);
    out.usage.source = UsageSource::estimated;
  }
  return out;
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig cfg, Sleeper sleeper, EnvLookup env)
    : cfg_(std::move(cfg)), sleep_(std::move(sleeper)), env_(std::move(env)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (!env_) env_ = getenv_lookup;

  auto endpoint = chat_endpoint(cfg_.base_url);
  origin_ = std::move(endpoint.origin);
  path_ = std::move(endpoint.path);
}

ChatResponse HttpBackend::complete(const ChatRequest& req) {
  std::optional<std::string> key;
  if (!cfg_.api_key_env.empty()) {
    key = env_(cfg_.api_key_env);
    if (!key) fail(ErrorKind::AuthMissing, "environment variable " + cfg_.api_key_env + " is not set");
  }

  json body = json::object();
  body["model"] = req.model;
  json messages = json::array();
  if (req.system) messages.push_back({{"role", "system"}, {"content", *req.system}});
  messages.push_back({{"role", "user"}, {"content", req.user}});
  body["messages"] = std::move(messages);
  body["temperature"] = req.temperature;
  if (req.max_tokens) body["max_tokens"] = *req.max_tokens;
  const std::string payload = dump_canonical(body);

  httplib::Headers headers;
  if (key) headers.emplace("Authorization", "Bearer " + *key);

  const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
  const auto started = std::chrono::steady_clock::now();

  auto attempt_once = [&]() -> Attempt {
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    ++attempts_;
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      const std::string what = httplib::to_string(err);
      if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout || err == httplib::Error::Write)
        return {std::nullopt, Error(ErrorKind::Timeout, "request to " + origin_ + " timed out: " + what), true};
      return {std::nullopt, Error::backend(0, "request to " + origin_ + " failed: " + what), false};
    }
    const int status = res->status;
    if (status >= 200 && status < 300) {
      try {
        return {parse_completion(res->body, req, status), std::nullopt, false};
      } catch (const Error& e) {
        return {std::nullopt, e, false};
      }
    }
    if (status == 401)
      return {std::nullopt,
              Error(ErrorKind::AuthMissing, "upstream rejected the key from " + cfg_.api_key_env + " (HTTP 401)"),
              false};
    if (status == 429)
      return {std::nullopt, Error(ErrorKind::RateLimited, "HTTP 429: " + body_excerpt(res->body)), true};
    return {std::nullopt, Error::backend(status, body_excerpt(res->body)), status >= 500};
  };

  for (int attempt = 0;; ++attempt) {
    Attempt a = attempt_once();
    if (a.response) {
      a.response->retries = attempt;
      a.response->latency_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
      return *a.response;
    }
    if (!a.retryable || attempt >= cfg_.max_retries) throw *a.error;
    const auto delay = std::chrono::milliseconds(cfg_.retry_base_delay_ms << attempt);
    spdlog::warn("chat request failed ({}), retry {} of {} in {} ms", a.error->what(), attempt + 1, cfg_.max_retries,
                 delay.count());
    sleep_(delay);
  }
}

}  // namespace clai::gateway
