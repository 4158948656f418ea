#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>

#include "clai/gateway/chat.hpp"
#include "clai/pipeline/pipeline.hpp"

namespace httplib {
class Server;
}

namespace clai::service {

struct ProxyResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Chat-completions proxy. Requests carrying "X-CLAI-Mode: prompt" run the
// prompt pipeline on the last user message and come back as an ordinary
// completion whose usage is the transcript total. Other requests go to the
// upstream unchanged (HTTP upstreams) or are answered from the replay store.
//
// Errors: 400 for a malformed body, 504 for upstream timeouts, 502 for any
// other upstream failure.
class ProxyService {
 public:
  // Seconds since the Unix epoch, for the "created" field.
  using EpochClock = std::function<std::int64_t()>;

  ProxyService(pipeline::PipelineConfig cfg, std::unique_ptr<gateway::Backend> backend,
               pipeline::Clock clock = pipeline::steady_clock_ms(), EpochClock epoch = {});
  ~ProxyService();

  // Socket-free entry point; the HTTP server delegates here.
  ProxyResponse handle_chat(const std::string& body, const std::optional<std::string>& mode,
                            const std::optional<std::string>& authorization = std::nullopt);

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  ProxyResponse passthrough_http(const std::string& body, const std::optional<std::string>& authorization);
  ProxyResponse passthrough_backend(const std::string& body);
  ProxyResponse run_prompt_mode(const std::string& body);

  pipeline::PipelineConfig cfg_;
  std::unique_ptr<gateway::Backend> backend_;
  pipeline::Clock clock_;
  EpochClock epoch_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace clai::service
