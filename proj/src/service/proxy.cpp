#include "clai/service/proxy.hpp"

#include <httplib.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cctype>
#include <chrono>
#include <cstdlib>

#include "clai/core/codec.hpp"

namespace clai::service {
namespace {

ProxyResponse error_response(int status, std::string_view type, const std::string& message) {
  json body = {{"error", {{"message", message}, {"type", type}}}};
  return {status, dump_canonical(body)};
}

int status_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Timeout: return 504;
    case ErrorKind::InvalidQuery: return 400;
    case ErrorKind::BackendError:
    case ErrorKind::RateLimited:
    case ErrorKind::AuthMissing:
    case ErrorKind::StorageError: return 502;
    default: return 500;
  }
}

ProxyResponse from_error(const Error& e) {
  const int status = status_for(e);
  const std::string_view type = status == 400 ? "invalid_request_error" : status == 500 ? "server_error" : "upstream_error";
  return error_response(status, type, e.what());
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct ParsedRequest {
  gateway::ChatRequest chat;
};

// Validates the body and reduces it to a single-turn request. Throws a
// ProxyResponse with status 400 on failure.
ParsedRequest parse_request(const std::string& body, const std::string& default_model) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw error_response(400, "invalid_request_error", "body is not a JSON object");
  ParsedRequest out;
  auto& req = out.chat;
  req.model = default_model;
  if (auto m = j.find("model"); m != j.end()) {
    if (!m->is_string()) throw error_response(400, "invalid_request_error", "'model' must be a string");
    req.model = m->get<std::string>();
  }
  const auto messages = j.find("messages");
  if (messages == j.end() || !messages->is_array() || messages->empty())
    throw error_response(400, "invalid_request_error", "'messages' must be a non-empty array");
  std::optional<std::string> user;
  for (const auto& m : *messages) {
    if (!m.is_object() || !m.contains("role") || !m["role"].is_string() || !m.contains("content") ||
        !m["content"].is_string())
      throw error_response(400, "invalid_request_error", "each message needs string 'role' and 'content'");
    const auto role = m["role"].get<std::string>();
    if (role == "system" && !req.system) req.system = m["content"].get<std::string>();
    else if (role == "user") user = m["content"].get<std::string>();
  }
  if (!user) throw error_response(400, "invalid_request_error", "no user message");
  req.user = *user;
  if (auto t = j.find("temperature"); t != j.end() && !t->is_null()) {
    if (!t->is_number() || t->get<double>() < 0)
      throw error_response(400, "invalid_request_error", "'temperature' must be a non-negative number");
    req.temperature = t->get<double>();
  }
  if (auto mt = j.find("max_tokens"); mt != j.end() && !mt->is_null()) {
    if (!mt->is_number_integer() || mt->get<std::int64_t>() < 1)
      throw error_response(400, "invalid_request_error", "'max_tokens' must be a positive integer");
    req.max_tokens = mt->get<std::int64_t>();
  }
  return out;
}

json completion_body(const std::string& id, std::int64_t created, const std::string& model, const std::string& content,
                     const std::string& finish_reason, const TokenUsage& usage) {
  json choice = {{"index", 0},
                 {"message", {{"role", "assistant"}, {"content", content}}},
                 {"finish_reason", finish_reason}};
  return {{"id", id},
          {"object", "chat.completion"},
          {"created", created},
          {"model", model},
          {"choices", json::array({choice})},
          {"usage",
           {{"prompt_tokens", usage.prompt_tokens},
            {"completion_tokens", usage.completion_tokens},
            {"total_tokens", usage.total()}}}};
}

}  // namespace

ProxyService::ProxyService(pipeline::PipelineConfig cfg, std::unique_ptr<gateway::Backend> backend,
                           pipeline::Clock clock, EpochClock epoch)
    : cfg_(std::move(cfg)), backend_(std::move(backend)), clock_(std::move(clock)), epoch_(std::move(epoch)) {
  if (!epoch_) {
    epoch_ = [] {
      return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  if (auto v = pipeline::validate_config(cfg_); !v) fail(ErrorKind::ConfigError, v.violations.front());
}

ProxyService::~ProxyService() = default;

ProxyResponse ProxyService::handle_chat(const std::string& body, const std::optional<std::string>& mode,
                                        const std::optional<std::string>& authorization) {
  try {
    if (mode) {
      if (lower(trim(*mode)) != "prompt")
        return error_response(400, "invalid_request_error", "unsupported X-CLAI-Mode '" + *mode + "'");
      return run_prompt_mode(body);
    }
    if (cfg_.backend.kind == gateway::BackendKind::http) return passthrough_http(body, authorization);
    return passthrough_backend(body);
  } catch (const ProxyResponse& r) {
    return r;
  } catch (const Error& e) {
    spdlog::warn("proxy request failed: {}", e.what());
    return from_error(e);
  }
}

ProxyResponse ProxyService::passthrough_http(const std::string& body, const std::optional<std::string>& authorization) {
  // Validate only; the body itself is forwarded untouched.
  parse_request(body, cfg_.model);
  const auto endpoint = gateway::chat_endpoint(cfg_.backend.base_url);
  httplib::Client client(endpoint.origin);
  const auto timeout = std::chrono::milliseconds(cfg_.backend.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (authorization) {
    headers.emplace("Authorization", *authorization);
  } else if (!cfg_.backend.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg_.backend.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(endpoint.path, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const bool timed_out =
        err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout || err == httplib::Error::Write;
    return error_response(timed_out ? 504 : 502, "upstream_error",
                          fmt::format("upstream {}: {}", endpoint.origin, httplib::to_string(err)));
  }
  ProxyResponse out{res->status, res->body, res->get_header_value("Content-Type")};
  if (out.content_type.empty()) out.content_type = "application/json";
  return out;
}

ProxyResponse ProxyService::passthrough_backend(const std::string& body) {
  const auto parsed = parse_request(body, cfg_.model);
  const auto resp = backend_->complete(parsed.chat);
  const auto digest = gateway::request_digest(parsed.chat);
  const auto out = completion_body("chatcmpl-" + digest.substr(0, 24), epoch_(), parsed.chat.model, resp.text,
                                   resp.finish_reason.value_or("stop"), resp.usage);
  return {200, dump_canonical(out)};
}

ProxyResponse ProxyService::run_prompt_mode(const std::string& body) {
  const auto parsed = parse_request(body, cfg_.model);
  auto cfg = cfg_;
  cfg.model = parsed.chat.model;
  const auto digest = gateway::request_digest(parsed.chat);
  const Query q{"proxy-" + digest.substr(0, 12), parsed.chat.user, std::nullopt};
  if (auto v = validate_query(q); !v) return error_response(400, "invalid_request_error", v.violations.front());

  pipeline::Pipeline p(cfg, *backend_, clock_);
  PipelineTranscript t;
  try {
    t = p.run_clai_prompt(q);
  } catch (const pipeline::PipelineError& e) {
    spdlog::warn("prompt-mode pipeline failed after {} stage(s): {}", e.partial().stages.size(), e.what());
    return from_error(e);
  }
  const auto out = completion_body("chatcmpl-clai-" + digest.substr(0, 24), epoch_(), cfg.model, t.final_answer,
                                   t.reasoning && t.reasoning->truncated ? "length" : "stop", t.total_usage);
  return {200, dump_canonical(out)};
}

int ProxyService::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> mode;
    if (req.has_header("X-CLAI-Mode")) mode = req.get_header_value("X-CLAI-Mode");
    std::optional<std::string> auth;
    if (req.has_header("Authorization")) auth = req.get_header_value("Authorization");
    auto out = handle_chat(req.body, mode, auth);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  });
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound <= 0) fail(ErrorKind::ConfigError, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) fail(ErrorKind::ConfigError, fmt::format("cannot bind {}:{}", host, port));
  return port;
}

void ProxyService::listen() {
  require(server_ != nullptr, "bind() before listen()");
  server_->listen_after_bind();
}

void ProxyService::stop() {
  if (server_) server_->stop();
}

}  // namespace clai::service
