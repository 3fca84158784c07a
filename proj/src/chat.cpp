#include "clinagent/chat.hpp"

#include "clinagent/text.hpp"

namespace clinagent {

using nlohmann::json;

std::string role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
    case Role::kTool: return "tool";
  }
  return "user";
}

Role parse_role(const std::string& name) {
  if (name == "system") return Role::kSystem;
  if (name == "user") return Role::kUser;
  if (name == "assistant") return Role::kAssistant;
  if (name == "tool") return Role::kTool;
  throw Error("unknown chat role '" + name + "'");
}

ChatMessage ChatMessage::system(std::string content) {
  return {Role::kSystem, std::move(content), {}, std::nullopt};
}
ChatMessage ChatMessage::user(std::string content) {
  return {Role::kUser, std::move(content), {}, std::nullopt};
}
ChatMessage ChatMessage::assistant(std::string content, std::vector<ToolCallRequest> calls) {
  return {Role::kAssistant, std::move(content), std::move(calls), std::nullopt};
}
ChatMessage ChatMessage::tool(std::string tool_call_id, std::string content) {
  return {Role::kTool, std::move(content), {}, std::move(tool_call_id)};
}

void ChatMessage::validate() const {
  if ((role == Role::kTool) != tool_call_id.has_value()) {
    throw Error("tool_call_id must be present exactly on tool messages");
  }
  if (!tool_calls.empty() && role != Role::kAssistant) {
    throw Error("only assistant messages may carry tool calls");
  }
  for (const auto& call : tool_calls) {
    const auto args = json::parse(call.arguments, nullptr, false);
    if (args.is_discarded() || !args.is_object()) {
      throw Error("tool call " + call.name + " arguments are not a JSON object");
    }
  }
}

void CompletionRequest::validate() const {
  if (messages.empty()) throw Error("completion request has no messages");
  if (messages.front().role != Role::kSystem && messages.front().role != Role::kUser) {
    throw Error("first message must be a system or user message");
  }
  if (temperature < 0.0 || temperature > 2.0) throw Error("temperature outside [0, 2]");
  for (const auto& m : messages) m.validate();
}

json to_wire(const ChatMessage& message) {
  json j = {{"role", role_name(message.role)}};
  if (message.role == Role::kAssistant && message.content.empty() && !message.tool_calls.empty()) {
    j["content"] = nullptr;
  } else {
    j["content"] = message.content;
  }
  if (!message.tool_calls.empty()) {
    json calls = json::array();
    for (const auto& c : message.tool_calls) {
      calls.push_back({{"id", c.id},
                       {"type", "function"},
                       {"function", {{"name", c.name}, {"arguments", c.arguments}}}});
    }
    j["tool_calls"] = std::move(calls);
  }
  if (message.tool_call_id) j["tool_call_id"] = *message.tool_call_id;
  return j;
}

ChatMessage message_from_wire(const json& j) {
  ChatMessage m;
  m.role = parse_role(j.at("role").get<std::string>());
  if (j.contains("content") && j["content"].is_string()) m.content = j["content"].get<std::string>();
  if (j.contains("tool_calls") && j["tool_calls"].is_array()) {
    for (const auto& c : j["tool_calls"]) {
      const auto& fn = c.at("function");
      ToolCallRequest call;
      call.id = c.value("id", std::string());
      call.name = fn.at("name").get<std::string>();
      const auto& args = fn.value("arguments", json("{}"));
      call.arguments = args.is_string() ? args.get<std::string>() : args.dump();
      m.tool_calls.push_back(std::move(call));
    }
  }
  if (j.contains("tool_call_id") && j["tool_call_id"].is_string()) {
    m.tool_call_id = j["tool_call_id"].get<std::string>();
  }
  return m;
}

json to_wire(const CompletionRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back(to_wire(m));
  json j = {{"model", request.model}, {"messages", std::move(messages)},
            {"temperature", request.temperature}};
  if (!request.tools.empty()) j["tools"] = request.tools;
  return j;
}

CompletionRequest request_from_wire(const json& j) {
  CompletionRequest r;
  r.model = j.at("model").get<std::string>();
  for (const auto& m : j.at("messages")) r.messages.push_back(message_from_wire(m));
  if (j.contains("tools")) r.tools = j["tools"];
  r.temperature = j.value("temperature", 0.0);
  return r;
}

ChatMessage parse_completion_response(const json& body) {
  if (body.contains("error")) {
    const auto& err = body["error"];
    throw HttpError(200, err.is_object() ? err.value("message", err.dump()) : err.dump());
  }
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    throw Error("completion response has no choices");
  }
  auto msg = message_from_wire(body["choices"][0].at("message"));
  if (msg.role != Role::kAssistant) throw Error("completion reply is not an assistant message");
  return msg;
}

std::string fingerprint(const CompletionRequest& request) {
  json canon = json::array();
  canon.push_back(request.model);
  json messages = json::array();
  for (const auto& m : request.messages) {
    json calls = json::array();
    for (const auto& c : m.tool_calls) calls.push_back({c.name, c.arguments});
    messages.push_back({role_name(m.role), m.content, std::move(calls)});
  }
  canon.push_back(std::move(messages));
  json tool_names = json::array();
  for (const auto& t : request.tools) {
    if (t.contains("function")) tool_names.push_back(t["function"].value("name", ""));
    else tool_names.push_back(t.value("name", ""));
  }
  canon.push_back(std::move(tool_names));
  return "sha256:" + sha256_hex(canon.dump());
}

void WireLog::append(Entry entry) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(entry));
}

std::vector<WireLog::Entry> WireLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

}  // namespace clinagent
