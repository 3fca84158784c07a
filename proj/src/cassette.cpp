#include "clinagent/cassette.hpp"

#include <algorithm>
#include <fstream>

namespace clinagent {

using nlohmann::json;

Cassette Cassette::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open cassette " + path.string());
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InputError("cassette " + path.string() + " is not valid JSON");
  return from_json(j);
}

void Cassette::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write cassette " + path.string());
  out << to_json().dump(2) << '\n';
}

json Cassette::to_json() const {
  json arr = json::array();
  for (const auto& e : entries) {
    arr.push_back({{"fingerprint", e.fingerprint}, {"request", e.request}, {"response", e.response}});
  }
  return arr;
}

Cassette Cassette::from_json(const json& j) {
  if (!j.is_array()) throw InputError("cassette must be a JSON array");
  Cassette c;
  for (const auto& rec : j) {
    if (!rec.is_object() || !rec.contains("fingerprint") || !rec.contains("response")) {
      throw InputError("cassette record needs fingerprint and response");
    }
    c.entries.push_back({rec["fingerprint"].get<std::string>(), rec.value("request", json()),
                         rec["response"]});
  }
  return c;
}

ReplayBackend::ReplayBackend(Cassette cassette, std::shared_ptr<WireLog> log)
    : cassette_(std::move(cassette)), log_(std::move(log)), used_(cassette_.entries.size(), false) {
  for (std::size_t i = 0; i < cassette_.entries.size(); ++i) {
    if (!index_.emplace(cassette_.entries[i].fingerprint, i).second) {
      throw InputError("duplicate cassette fingerprint " + cassette_.entries[i].fingerprint);
    }
  }
}

ChatMessage ReplayBackend::complete(const CompletionRequest& request) {
  const std::string digest = fingerprint(request);
  std::size_t idx = 0;
  {
    std::lock_guard lock(mu_);
    const std::string key = digest + "#" + std::to_string(served_[digest]);
    const auto it = index_.find(key);
    if (it == index_.end()) {
      std::size_t next = 0;
      while (next < used_.size() && used_[next]) ++next;
      if (next == used_.size()) {
        throw ReplayError("cassette exhausted: no entry for request " + key);
      }
      throw ReplayError("replay fingerprint mismatch: expected " +
                        cassette_.entries[next].fingerprint + ", actual " + key);
    }
    idx = it->second;
    used_[idx] = true;
    ++served_[digest];
  }
  const auto& entry = cassette_.entries[idx];
  if (log_) log_->append({to_wire(request).dump(), entry.response.dump()});
  auto msg = message_from_wire(entry.response);
  msg.validate();
  return msg;
}

std::size_t ReplayBackend::consumed() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count(used_.begin(), used_.end(), true));
}

RecordingBackend::RecordingBackend(std::shared_ptr<LLMBackend> inner, std::shared_ptr<WireLog> log)
    : inner_(std::move(inner)), log_(std::move(log)) {}

ChatMessage RecordingBackend::complete(const CompletionRequest& request) {
  auto reply = inner_->complete(request);
  const std::string digest = fingerprint(request);
  const json wire_request = to_wire(request);
  json wire_reply = to_wire(reply);
  {
    std::lock_guard lock(mu_);
    const auto k = seen_[digest]++;
    cassette_.entries.push_back({digest + "#" + std::to_string(k), wire_request, wire_reply});
  }
  if (log_) log_->append({wire_request.dump(), wire_reply.dump()});
  return reply;
}

Cassette RecordingBackend::cassette() const {
  std::lock_guard lock(mu_);
  return cassette_;
}

void RecordingBackend::save(const std::filesystem::path& path) const { cassette().save(path); }

}  // namespace clinagent
