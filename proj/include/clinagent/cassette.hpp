#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "clinagent/chat.hpp"

namespace clinagent {

/// One recorded exchange. `fingerprint` is "<digest>#<k>": the request digest
/// plus the occurrence index of that digest within the cassette, so repeated
/// identical requests map to distinct responses.
struct CassetteEntry {
  std::string fingerprint;
  nlohmann::json request;   // wire request
  nlohmann::json response;  // wire assistant message
};

enum class CassetteMode { kRecord, kReplay };

struct Cassette {
  CassetteMode mode = CassetteMode::kReplay;
  std::vector<CassetteEntry> entries;

  static Cassette load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  nlohmann::json to_json() const;
  static Cassette from_json(const nlohmann::json& j);
};

/// Serves responses from a cassette. Each request consumes the entry whose
/// fingerprint is its digest plus the number of times that digest has
/// already been served; lookup is synchronized.
class ReplayBackend : public LLMBackend {
 public:
  explicit ReplayBackend(Cassette cassette, std::shared_ptr<WireLog> log = nullptr);

  ChatMessage complete(const CompletionRequest& request) override;

  std::size_t consumed() const;
  std::size_t size() const { return cassette_.entries.size(); }

 private:
  Cassette cassette_;
  std::shared_ptr<WireLog> log_;
  mutable std::mutex mu_;
  std::map<std::string, std::size_t> index_;  // fingerprint -> entry
  std::map<std::string, std::size_t> served_;  // digest -> count
  std::vector<bool> used_;
};

/// Forwards to an inner backend and appends every exchange to a cassette.
class RecordingBackend : public LLMBackend {
 public:
  explicit RecordingBackend(std::shared_ptr<LLMBackend> inner,
                            std::shared_ptr<WireLog> log = nullptr);

  ChatMessage complete(const CompletionRequest& request) override;

  Cassette cassette() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::shared_ptr<LLMBackend> inner_;
  std::shared_ptr<WireLog> log_;
  mutable std::mutex mu_;
  Cassette cassette_{CassetteMode::kRecord, {}};
  std::map<std::string, std::size_t> seen_;
};

}  // namespace clinagent
