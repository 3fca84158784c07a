#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clinagent/error.hpp"

namespace clinagent {

enum class Role { kSystem, kUser, kAssistant, kTool };

std::string role_name(Role role);
Role parse_role(const std::string& name);

struct ToolCallRequest {
  std::string id;
  std::string name;
  std::string arguments;  // JSON object text

  bool operator==(const ToolCallRequest&) const = default;
};

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;
  std::vector<ToolCallRequest> tool_calls;  // assistant only
  std::optional<std::string> tool_call_id;  // tool only

  static ChatMessage system(std::string content);
  static ChatMessage user(std::string content);
  static ChatMessage assistant(std::string content, std::vector<ToolCallRequest> calls = {});
  static ChatMessage tool(std::string tool_call_id, std::string content);

  /// Throws Error when the role/tool_call_id/tool_calls invariants fail.
  void validate() const;

  bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  nlohmann::json tools = nlohmann::json::array();  // OpenAI tool schemas
  double temperature = 0.0;

  void validate() const;
};

/// OpenAI-compatible chat-completions dialect.
nlohmann::json to_wire(const ChatMessage& message);
ChatMessage message_from_wire(const nlohmann::json& j);
nlohmann::json to_wire(const CompletionRequest& request);
CompletionRequest request_from_wire(const nlohmann::json& j);

/// Extracts choices[0].message from a chat-completions response body.
ChatMessage parse_completion_response(const nlohmann::json& body);

/// SHA-256 over model, message roles and contents (tool calls included) and
/// tool names. Endpoint and credentials never enter the digest.
std::string fingerprint(const CompletionRequest& request);

/// Provider reported an error (HTTP status >= 400 or unparseable body).
class HttpError : public Error {
 public:
  HttpError(int status, const std::string& message)
      : Error("HTTP " + std::to_string(status) + ": " + message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ReplayError : public Error {
 public:
  using Error::Error;
};

/// Append-only log of raw request/response exchanges. Each append is atomic.
class WireLog {
 public:
  struct Entry {
    std::string request;
    std::string response;
  };

  void append(Entry entry);
  std::vector<Entry> entries() const;

 private:
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
};

class LLMBackend {
 public:
  virtual ~LLMBackend() = default;
  /// Returns the assistant reply. Never mutates the request.
  virtual ChatMessage complete(const CompletionRequest& request) = 0;
};

}  // namespace clinagent
