#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "clinagent/chat.hpp"

namespace clinagent {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  /// Replaced in tests to avoid real sleeps.
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

/// Splits "https://host:port/prefix" into the origin and path prefix.
struct Endpoint {
  std::string origin;
  std::string path_prefix;

  static Endpoint parse(const std::string& base_url);
};

/// Live chat-completions client. POSTs to `<base>/chat/completions`.
/// Transport failures and 5xx responses are retried with exponential
/// backoff; 4xx responses fail immediately with the provider's message.
class HttpChatBackend : public LLMBackend {
 public:
  HttpChatBackend(std::string base_url, std::string api_key, RetryPolicy retry = {},
                  std::shared_ptr<WireLog> log = nullptr);

  ChatMessage complete(const CompletionRequest& request) override;

  int attempts_made() const noexcept { return last_attempts_; }

 private:
  Endpoint endpoint_;
  std::string api_key_;
  RetryPolicy retry_;
  std::shared_ptr<WireLog> log_;
  std::atomic<int> last_attempts_{0};
};

/// POSTs `body` as JSON and returns the parsed response, with the same retry
/// semantics as HttpChatBackend. Shared by the external enrollment predictor.
nlohmann::json post_json(const std::string& url, const std::string& path_suffix,
                         const nlohmann::json& body, const std::string& bearer,
                         const RetryPolicy& retry, int* attempts = nullptr,
                         std::string* raw_response = nullptr);

}  // namespace clinagent
