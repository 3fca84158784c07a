#include "clinagent/http_backend.hpp"

#include <httplib.h>

namespace clinagent {

using nlohmann::json;

Endpoint Endpoint::parse(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw InputError("endpoint URL needs a scheme: " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = base_url.substr(0, path_start);
  ep.path_prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
  return ep;
}

json post_json(const std::string& url, const std::string& path_suffix, const json& body,
               const std::string& bearer, const RetryPolicy& retry, int* attempts,
               std::string* raw_response) {
  const auto ep = Endpoint::parse(url);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);
  httplib::Headers headers;
  if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
  const std::string payload = body.dump();
  std::string path = ep.path_prefix + path_suffix;
  if (path.empty()) path = "/";

  auto delay = retry.base_delay;
  std::string last_failure;
  int last_status = 0;  // 0 when the last attempt never got a response
  for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
    if (attempts) *attempts = attempt;
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_status = 0;
      last_failure = "transport failure: " + httplib::to_string(res.error());
    } else if (res->status >= 400 && res->status < 500) {
      std::string message = res->body;
      const auto parsed = json::parse(res->body, nullptr, false);
      if (!parsed.is_discarded() && parsed.contains("error")) {
        const auto& err = parsed["error"];
        message = err.is_object() ? err.value("message", err.dump()) : err.dump();
      }
      throw HttpError(res->status, message);
    } else if (res->status >= 500) {
      last_status = res->status;
      last_failure = res->body;
    } else {
      if (raw_response) *raw_response = res->body;
      auto parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) throw HttpError(res->status, "response body is not JSON");
      return parsed;
    }
    if (attempt < retry.max_attempts) {
      retry.sleep(delay);
      delay = std::chrono::milliseconds(
          static_cast<std::chrono::milliseconds::rep>(delay.count() * retry.factor));
    }
  }
  const auto suffix = " (after " + std::to_string(retry.max_attempts) + " attempts)";
  if (last_status != 0) throw HttpError(last_status, last_failure + suffix);
  throw TransportError(last_failure + suffix);
}

HttpChatBackend::HttpChatBackend(std::string base_url, std::string api_key, RetryPolicy retry,
                                 std::shared_ptr<WireLog> log)
    : endpoint_(Endpoint::parse(base_url)),
      api_key_(std::move(api_key)),
      retry_(std::move(retry)),
      log_(std::move(log)) {}

ChatMessage HttpChatBackend::complete(const CompletionRequest& request) {
  request.validate();
  const json body = to_wire(request);
  int attempts = 0;
  std::string raw;
  json response;
  try {
    response = post_json(endpoint_.origin + endpoint_.path_prefix, "/chat/completions", body,
                         api_key_, retry_, &attempts, &raw);
  } catch (...) {
    last_attempts_ = attempts;
    throw;
  }
  last_attempts_ = attempts;
  if (log_) log_->append({body.dump(), raw});
  return parse_completion_response(response);
}

}  // namespace clinagent
