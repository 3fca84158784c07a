#include "clinagent/tools.hpp"

#include <sstream>

#include "clinagent/text.hpp"

namespace clinagent {

using nlohmann::json;

namespace {

bool matches_type(const json& value, const std::string& type) {
  if (type == "string") return value.is_string();
  if (type == "number") return value.is_number();
  if (type == "integer") return value.is_number_integer();
  if (type == "boolean") return value.is_boolean();
  if (type == "array") return value.is_array();
  if (type == "object") return value.is_object();
  return true;
}

// Returns an empty string when valid, else a message naming the field.
std::string validate_arguments(const json& schema, const json& args) {
  if (!args.is_object()) return "arguments must be a JSON object";
  const auto props = schema.value("properties", json::object());
  for (const auto& req : schema.value("required", json::array())) {
    const auto field = req.get<std::string>();
    if (!args.contains(field)) return "missing required field '" + field + "'";
  }
  for (const auto& [field, spec] : props.items()) {
    if (!args.contains(field) || !spec.contains("type")) continue;
    const auto type = spec["type"].get<std::string>();
    if (!matches_type(args[field], type)) {
      return "field '" + field + "' must be of type " + type;
    }
  }
  return {};
}

json string_param(const std::string& description) {
  return {{"type", "string"}, {"description", description}};
}

std::string require_text(const json& args, const char* field) {
  auto value = trim(args.at(field).get<std::string>());
  if (value.empty()) throw ToolError(std::string("field '") + field + "' is empty");
  return value;
}

std::string describe_score(const std::string& label, const std::string& name,
                           const std::optional<RiskScore>& score) {
  std::ostringstream out;
  out << label << " '" << name << "': ";
  if (!score) {
    out << "no historical data.";
    return out.str();
  }
  out << "historical failure rate " << format_rate(score->failure_rate) << " (matched '"
      << score->matched_name << "', similarity " << format_rate(score->match_similarity) << ", "
      << score->support << (score->support == 1 ? " trial" : " trials") << ").";
  return out.str();
}

ToolDefinition make_historical_statistics(const OutcomeTable& table, const std::string& tool_name,
                                          const std::string& field, const std::string& label,
                                          const std::string& description) {
  ToolDefinition def;
  def.name = tool_name;
  def.description = description;
  def.parameters_schema = {
      {"type", "object"},
      {"properties",
       {{field, string_param("The " + entity_kind_name(table.kind()) +
                             " name. Separate several names with ';'.")}}},
      {"required", {field}}};
  def.handler = [&table, field, label](const json& args) {
    std::vector<std::string> names;
    for (const auto& part : split(require_text(args, field.c_str()), ';')) {
      auto t = trim(part);
      if (!t.empty()) names.push_back(std::move(t));
    }
    if (names.empty()) throw ToolError("field '" + field + "' is empty");
    std::ostringstream out;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) out << '\n';
      out << describe_score(label, names[i], entity_failure_rate(table, names[i]));
    }
    if (names.size() > 1) {
      const auto agg = trial_entity_risk(table, names);
      out << "\nAggregate (maximum over known " << entity_kind_name(table.kind()) << "s): ";
      if (agg) {
        out << "failure rate " << format_rate(agg->failure_rate) << " (driven by '"
            << agg->matched_name << "').";
      } else {
        out << "no historical data.";
      }
    }
    return out.str();
  };
  return def;
}

}  // namespace

json ToolDefinition::schema() const {
  return {{"type", "function"},
          {"function",
           {{"name", name}, {"description", description}, {"parameters", parameters_schema}}}};
}

ToolRegistry::ToolRegistry(std::vector<ToolDefinition> tools) {
  for (auto& t : tools) add(std::move(t));
}

void ToolRegistry::add(ToolDefinition tool) {
  if (tool.name.empty()) throw Error("tool with empty name");
  if (index_.count(tool.name)) throw Error("duplicate tool name " + tool.name);
  const auto props = tool.parameters_schema.value("properties", json::object());
  for (const auto& req : tool.parameters_schema.value("required", json::array())) {
    if (!props.contains(req.get<std::string>())) {
      throw Error("tool " + tool.name + " requires undeclared parameter " + req.get<std::string>());
    }
  }
  index_.emplace(tool.name, tools_.size());
  tools_.push_back(std::move(tool));
}

json ToolRegistry::schema_payload() const {
  json out = json::array();
  for (const auto& t : tools_) out.push_back(t.schema());
  return out;
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& t : tools_) out.push_back(t.name);
  return out;
}

ToolResult ToolRegistry::dispatch(const ToolCallRequest& call) const noexcept {
  ToolResult result{call.id, {}, true};
  try {
    const auto it = index_.find(call.name);
    if (it == index_.end()) {
      result.content = "unknown tool " + call.name;
      return result;
    }
    const auto& tool = tools_[it->second];
    const auto args = json::parse(call.arguments.empty() ? std::string("{}") : call.arguments,
                                  nullptr, false);
    if (args.is_discarded()) {
      result.content = "invalid arguments for " + tool.name + ": not valid JSON";
      return result;
    }
    if (auto problem = validate_arguments(tool.parameters_schema, args); !problem.empty()) {
      result.content = "invalid arguments for " + tool.name + ": " + problem;
      return result;
    }
    result.content = tool.handler(args);
    if (result.content.empty()) result.content = "(no output)";
    result.is_error = false;
  } catch (const std::exception& e) {
    result.content = "tool " + call.name + " failed: " + e.what();
    result.is_error = true;
  } catch (...) {
    result.content = "tool " + call.name + " failed";
    result.is_error = true;
  }
  return result;
}

std::string canonical_json(const json& value) { return value.dump(); }

ToolDefinition make_retrieval_drugbank(const DrugStore& store) {
  ToolDefinition def;
  def.name = "retrieval_drugbank";
  def.description =
      "Retrieves information about a drug from the DrugBank database using the drug's name as input.";
  def.parameters_schema = {{"type", "object"},
                           {"properties", {{"drug_name", string_param("The name of the drug.")}}},
                           {"required", {"drug_name"}}};
  def.handler = [&store](const json& args) {
    const auto name = require_text(args, "drug_name");
    const auto hit = store.lookup(name);
    if (!hit) throw ToolError("no DrugBank entry matches '" + name + "'");
    std::ostringstream out;
    out << "DrugBank entry for '" << name << "' (" << match_kind_name(hit->kind)
        << " match, similarity " << format_rate(hit->similarity) << "):\n"
        << "Name: " << hit->entry.name << '\n'
        << "Description: " << hit->entry.description << '\n'
        << "Indication: " << hit->entry.indication << '\n'
        << "Mechanism of action: " << hit->entry.mechanism << '\n'
        << "SMILES: " << (hit->entry.smiles.empty() ? "(not available)" : hit->entry.smiles);
    return out.str();
  };
  return def;
}

ToolDefinition make_retrieval_hetionet(const HetioGraph& graph, PathBounds bounds) {
  ToolDefinition def;
  def.name = "retrieval_hetionet";
  def.description =
      "Given the names of a drug and a disease, the model retrieves the path connecting the drug "
      "to the disease from the Hetionet Knowledge Graph. Hetionet is a comprehensive knowledge "
      "graph that integrates diverse biological information by connecting genes, diseases, "
      "compounds, and more into an interoperable framework. It structures real-world biomedical "
      "data into a network, facilitating advanced analysis and discovery of new insights into "
      "disease mechanisms, drug repurposing, and the genetic underpinnings of health and disease.";
  def.parameters_schema = {{"type", "object"},
                           {"properties",
                            {{"drug_name", string_param("The drug name")},
                             {"disease_name", string_param("The disease name")}}},
                           {"required", {"drug_name", "disease_name"}}};
  def.handler = [&graph, bounds](const json& args) {
    const auto drug = require_text(args, "drug_name");
    const auto disease = require_text(args, "disease_name");
    const auto paths = find_paths(graph, drug, disease, bounds.max_len, bounds.max_paths);
    std::ostringstream out;
    if (paths.empty()) {
      out << "No path of length <= " << bounds.max_len << " connects '" << drug << "' to '"
          << disease << "' in the knowledge graph.";
      return out.str();
    }
    out << "Found " << paths.size() << (paths.size() == 1 ? " path" : " paths")
        << " connecting '" << drug << "' to '" << disease << "' (max length " << bounds.max_len
        << "):";
    for (std::size_t i = 0; i < paths.size(); ++i) {
      out << '\n' << (i + 1) << ". " << render_path(graph, paths[i]);
    }
    return out.str();
  };
  return def;
}

ToolDefinition make_drug_historical_statistics(const OutcomeTable& drugs) {
  return make_historical_statistics(
      drugs, "drug_historical_statistics", "drug_name", "Drug",
      "Looks up the historical failure rate of a drug across past clinical trials, computed as "
      "one minus the mean of its trial outcomes (1 for success, 0 for failure).");
}

ToolDefinition make_disease_historical_statistics(const OutcomeTable& diseases) {
  return make_historical_statistics(
      diseases, "disease_historical_statistics", "disease_name", "Disease",
      "Looks up the historical failure rate of clinical trials targeting a disease, computed as "
      "one minus the mean of their trial outcomes (1 for success, 0 for failure).");
}

ToolDefinition make_enrollment_prediction_model(const EnrollmentPredictor& predictor,
                                                const TrialRecord& trial) {
  ToolDefinition def;
  def.name = "enrollment_prediction_model";
  def.description =
      "Predicts whether a clinical trial will enroll enough participants, from its eligibility "
      "criteria, drugs and diseases. Returns the predicted enrollment failure rate.";
  def.parameters_schema = {
      {"type", "object"},
      {"properties", {{"trial_id", string_param("The identifier of the trial under study.")}}},
      {"required", {"trial_id"}}};
  def.handler = [&predictor, &trial](const json& args) {
    const auto id = require_text(args, "trial_id");
    if (id != trial.trial_id) {
      throw ToolError("unknown trial '" + id + "'; the trial under study is " + trial.trial_id);
    }
    const double success = predictor.success_probability(trial);
    std::ostringstream out;
    out << "Predicted enrollment failure rate " << format_rate(1.0 - success)
        << " (enrollment success probability " << format_rate(success) << ") for trial "
        << trial.trial_id << ".";
    return out.str();
  };
  return def;
}

}  // namespace clinagent
