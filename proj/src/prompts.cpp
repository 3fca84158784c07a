#include "clinagent/prompts.hpp"

#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "clinagent/error.hpp"
#include "clinagent/text.hpp"

namespace clinagent {

namespace {

constexpr std::array<AgentRole, 5> kAllRoles = {AgentRole::kPlanning, AgentRole::kEnrollment,
                                                AgentRole::kSafety, AgentRole::kEfficacy,
                                                AgentRole::kReasoning};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string role_key(AgentRole role) {
  switch (role) {
    case AgentRole::kPlanning: return "planning";
    case AgentRole::kEnrollment: return "enrollment";
    case AgentRole::kSafety: return "safety";
    case AgentRole::kEfficacy: return "efficacy";
    case AgentRole::kReasoning: return "reasoning";
  }
  return "planning";
}

std::string agent_title(AgentRole role) {
  auto key = role_key(role);
  key[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(key[0])));
  return key + " Agent";
}

AgentRole parse_agent_role(const std::string& key) {
  for (auto role : kAllRoles) {
    if (role_key(role) == key) return role;
  }
  throw InputError("unknown agent role '" + key + "'");
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw InputError("prompt directory not found: " + dir.string());
  }
  PromptSet set;
  for (auto role : kAllRoles) {
    set.system[role] = trim(read_file(dir / (role_key(role) + ".txt")));
    const auto ex_path = dir / "exemplars" / (role_key(role) + ".json");
    auto& list = set.exemplars[role];
    if (!std::filesystem::exists(ex_path)) continue;
    const auto j = nlohmann::json::parse(read_file(ex_path), nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
      throw InputError("exemplar file " + ex_path.string() + " must be a JSON array");
    }
    for (const auto& e : j) {
      if (!e.contains("input") || !e.contains("output")) {
        throw InputError("exemplar in " + ex_path.string() + " needs input and output");
      }
      list.push_back({e["input"].get<std::string>(), e["output"].get<std::string>()});
    }
  }
  return set;
}

std::filesystem::path PromptSet::default_dir() {
#ifdef CLINAGENT_DEFAULT_PROMPTS_DIR
  return CLINAGENT_DEFAULT_PROMPTS_DIR;
#else
  return "prompts";
#endif
}

}  // namespace clinagent
