#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clinagent/chat.hpp"
#include "clinagent/enrollment.hpp"
#include "clinagent/knowledge.hpp"
#include "clinagent/risk.hpp"

namespace clinagent {

/// Raised by handlers for expected failures; the message becomes the
/// observation text.
class ToolError : public Error {
 public:
  using Error::Error;
};

using ToolHandler = std::function<std::string(const nlohmann::json& arguments)>;

struct ToolDefinition {
  std::string name;
  std::string description;
  nlohmann::json parameters_schema;  // {"type":"object","properties":{...},"required":[...]}
  ToolHandler handler;

  /// OpenAI `{"type":"function","function":{...}}` wrapper.
  nlohmann::json schema() const;
};

struct ToolResult {
  std::string tool_call_id;
  std::string content;
  bool is_error = false;
};

/// Ordered, name-unique set of tools. Immutable once built.
class ToolRegistry {
 public:
  ToolRegistry() = default;
  explicit ToolRegistry(std::vector<ToolDefinition> tools);

  /// Throws Error on duplicate names or a required parameter missing from
  /// properties.
  void add(ToolDefinition tool);

  nlohmann::json schema_payload() const;

  /// Validates arguments and runs the handler. Never throws: every failure
  /// is reported as an is_error result.
  ToolResult dispatch(const ToolCallRequest& call) const noexcept;

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  bool empty() const { return tools_.empty(); }
  std::size_t size() const { return tools_.size(); }
  std::vector<std::string> names() const;

 private:
  std::vector<ToolDefinition> tools_;
  std::map<std::string, std::size_t> index_;
};

/// Canonical form for schema comparison: sorted keys, no whitespace.
std::string canonical_json(const nlohmann::json& value);

struct PathBounds {
  int max_len = kDefaultMaxPathLength;
  int max_paths = kDefaultMaxPaths;
};

ToolDefinition make_retrieval_drugbank(const DrugStore& store);
ToolDefinition make_retrieval_hetionet(const HetioGraph& graph, PathBounds bounds = {});
ToolDefinition make_drug_historical_statistics(const OutcomeTable& drugs);
ToolDefinition make_disease_historical_statistics(const OutcomeTable& diseases);
/// Bound to the trial under evaluation; the trial_id argument must match it.
ToolDefinition make_enrollment_prediction_model(const EnrollmentPredictor& predictor,
                                                const TrialRecord& trial);

}  // namespace clinagent
