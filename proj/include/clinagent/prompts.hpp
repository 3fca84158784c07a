#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace clinagent {

enum class AgentRole { kPlanning, kEnrollment, kSafety, kEfficacy, kReasoning };

inline constexpr std::array<AgentRole, 3> kSpecialistRoles = {
    AgentRole::kEnrollment, AgentRole::kSafety, AgentRole::kEfficacy};

std::string role_key(AgentRole role);    // "enrollment"
std::string agent_title(AgentRole role);  // "Enrollment Agent"
AgentRole parse_agent_role(const std::string& key);

struct Exemplar {
  std::string input;
  std::string output;
};

/// Role prompts and few-shot exemplars loaded from a prompts directory:
/// `<role>.txt` for every role and optional `exemplars/<role>.json` arrays
/// of {"input", "output"} objects.
struct PromptSet {
  std::map<AgentRole, std::string> system;
  std::map<AgentRole, std::vector<Exemplar>> exemplars;

  static PromptSet load(const std::filesystem::path& dir);
  /// Compiled-in location of the repository's prompts/ directory.
  static std::filesystem::path default_dir();
};

}  // namespace clinagent
