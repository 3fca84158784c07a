#include "clinagent/agents.hpp"

#include <algorithm>
#include <future>
#include <regex>
#include <sstream>

#include "clinagent/text.hpp"

namespace clinagent {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

bool is_specialist(AgentRole role) {
  return std::find(kSpecialistRoles.begin(), kSpecialistRoles.end(), role) != kSpecialistRoles.end();
}

std::string problem_statement(const TrialRecord& record) {
  return "Problem: predict whether the following clinical trial will succeed.\n" +
         render_trial_features(record);
}

}  // namespace

void AgentConfig::validate() const {
  if (max_iterations < 1) throw Error("max_iterations must be >= 1");
  if (is_specialist(role) && tools.empty()) {
    throw Error(agent_title(role) + " needs at least one tool");
  }
  if (!is_specialist(role) && !tools.empty()) {
    throw Error(agent_title(role) + " must not have tools");
  }
}

std::string AgentConfig::full_system_prompt() const {
  std::string out = system_prompt;
  if (!exemplars.empty()) {
    out += "\n\nExamples:";
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
      out += "\n\n### Example " + std::to_string(i + 1) + "\nInput:\n" + exemplars[i].input +
             "\nOutput:\n" + exemplars[i].output;
    }
  }
  return out;
}

const Subproblem& Plan::for_role(AgentRole role) const {
  for (const auto& s : subproblems) {
    if (s.assignee == role) return s;
  }
  throw Error("plan has no subproblem for the " + agent_title(role));
}

json ReActTranscript::to_json() const {
  json steps_json = json::array();
  for (const auto& s : steps) {
    if (s.kind == TranscriptStep::Kind::kThought) {
      steps_json.push_back({{"type", "thought"}, {"text", s.thought}});
    } else {
      steps_json.push_back({{"type", "tool_call"},
                            {"id", s.call.id},
                            {"name", s.call.name},
                            {"arguments", s.call.arguments},
                            {"result", s.result.content},
                            {"is_error", s.result.is_error}});
    }
  }
  return {{"role", role_key(role)},
          {"subproblem", subproblem},
          {"steps", std::move(steps_json)},
          {"final_report", final_report},
          {"iteration_count", iteration_count}};
}

std::string ReActTranscript::flatten() const {
  std::string out = subproblem;
  for (const auto& s : steps) {
    out += '\n';
    if (s.kind == TranscriptStep::Kind::kThought) {
      out += s.thought;
    } else {
      out += s.call.name + " " + s.call.arguments + "\n" + s.result.content;
    }
  }
  return out + '\n' + final_report;
}

json PredictionResult::to_json() const {
  json reports = json::object();
  for (const auto& [role, text] : subproblem_reports) reports[role_key(role)] = text;
  json transcripts_json = json::object();
  for (const auto& [role, t] : transcripts) transcripts_json[role_key(role)] = t.to_json();
  json subproblems = json::array();
  for (const auto& s : plan.subproblems) {
    subproblems.push_back({{"assignee", role_key(s.assignee)}, {"statement", s.statement}});
  }
  return {{"trial_id", trial_id},
          {"probability", probability},
          {"decision", decision},
          {"reports", std::move(reports)},
          {"transcripts", std::move(transcripts_json)},
          {"reasoning", reasoning_text},
          {"plan",
           {{"subproblems", std::move(subproblems)},
            {"fallback", plan.fallback},
            {"raw_reply", plan.raw_reply}}}};
}

json PipelineError::partial_json() const {
  json out = json::object();
  for (const auto& [role, t] : partial_) out[role_key(role)] = t.to_json();
  return out;
}

int decide(double probability) { return probability >= kDecisionThreshold ? 1 : 0; }

std::optional<double> extract_probability(std::string_view text) {
  const std::string s(text);
  static const std::regex kTagged(R"(prediction\s*:\s*\**\s*(-?(?:\d+(?:\.\d*)?|\.\d+)))",
                                  std::regex::icase);
  std::optional<std::string> tagged;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kTagged); it != std::sregex_iterator();
       ++it) {
    tagged = (*it)[1].str();
  }
  if (tagged) {
    const double v = std::stod(*tagged);
    if (v < 0.0 || v > 1.0) return std::nullopt;
    return v;
  }

  std::string last_line;
  for (const auto& line : split(s, '\n')) {
    if (!trim(line).empty()) last_line = line;
  }
  static const std::regex kNumber(R"((^|[^\w.])(-?(?:\d+(?:\.\d+)?|\.\d+))(?![\w]|\.\d))");
  std::optional<double> found;
  for (auto it = std::sregex_iterator(last_line.begin(), last_line.end(), kNumber);
       it != std::sregex_iterator(); ++it) {
    const double v = std::stod((*it)[2].str());
    if (v >= 0.0 && v <= 1.0) found = v;
  }
  return found;
}

std::optional<AgentRole> route_subproblem(std::string_view statement) {
  static const std::vector<std::pair<AgentRole, std::vector<std::string>>> kRoutes = {
      {AgentRole::kEnrollment, {"enrollment", "enrolment", "enroll", "enrol", "recruit"}},
      {AgentRole::kSafety, {"safety", "safe", "risk", "adverse", "toxic"}},
      {AgentRole::kEfficacy, {"efficacy", "effective", "effect", "treat"}},
  };
  const auto lower = to_lower_ascii(statement);
  std::optional<AgentRole> best;
  std::size_t best_pos = std::string::npos;
  for (const auto& [role, words] : kRoutes) {
    for (const auto& w : words) {
      const auto pos = lower.find(w);
      if (pos != std::string::npos && (best_pos == std::string::npos || pos < best_pos)) {
        best_pos = pos;
        best = role;
      }
    }
  }
  return best;
}

std::optional<Plan> parse_plan(std::string_view reply) {
  static const std::regex kItem(
      R"(^\s*(?:[-*]\s*)?\**\s*(?:subproblem\s*)?(\d+)\s*(?:\(([^)]*)\))?\s*\**\s*[.):]\s*\**\s*(.+?)\s*$)",
      std::regex::icase);
  Plan plan;
  plan.raw_reply = std::string(reply);
  for (const auto& line : split(reply, '\n')) {
    std::smatch m;
    const std::string l = trim(line);
    if (!std::regex_match(l, m, kItem)) continue;
    const std::string label = m[2].matched ? m[2].str() : std::string();
    const std::string statement = trim(m[3].str());
    if (statement.empty()) continue;
    auto role = label.empty() ? std::nullopt : route_subproblem(label);
    if (!role) role = route_subproblem(statement);
    if (!role) return std::nullopt;
    plan.subproblems.push_back({*role, statement});
  }
  if (plan.subproblems.size() != kSpecialistRoles.size()) return std::nullopt;
  for (auto role : kSpecialistRoles) {
    const auto n = std::count_if(plan.subproblems.begin(), plan.subproblems.end(),
                                 [role](const Subproblem& s) { return s.assignee == role; });
    if (n != 1) return std::nullopt;
  }
  return plan;
}

Plan canonical_plan(const TrialRecord& record) {
  // Names are lowercased the way the worked example quotes them.
  const auto drugs = to_lower_ascii(join(record.drugs, "; "));
  const auto diseases = to_lower_ascii(join(record.diseases, "; "));
  Plan plan;
  plan.fallback = true;
  plan.subproblems = {
      {AgentRole::kEnrollment,
       "Determine the level of enrollment feasibility based on the inclusion and exclusion "
       "criteria."},
      {AgentRole::kSafety, "Evaluate the safety of the drug \"" + drugs + "\"."},
      {AgentRole::kEfficacy,
       "Assess the efficacy of the drug \"" + drugs + "\" on the disease \"" + diseases + "\"."},
  };
  return plan;
}

Plan plan(const AgentConfig& config, const TrialRecord& record, LLMBackend& backend) {
  if (config.role != AgentRole::kPlanning) throw Error("plan requires the planning agent");
  config.validate();
  CompletionRequest request;
  request.model = config.model;
  request.temperature = config.temperature;
  request.messages = {ChatMessage::system(config.full_system_prompt()),
                      ChatMessage::user(problem_statement(record) +
                                        "\n\nDecompose the problem into subproblems, one per "
                                        "line, as `Subproblem N (<Role> Agent): <statement>`.")};
  const auto reply = backend.complete(request);
  if (auto parsed = parse_plan(reply.content)) return *parsed;
  auto fallback = canonical_plan(record);
  fallback.fallback = true;
  fallback.raw_reply = reply.content;
  return fallback;
}

ReActTranscript run_react(const AgentConfig& config, const std::string& subproblem,
                          const TrialRecord& record, LLMBackend& backend) {
  if (!is_specialist(config.role)) throw Error("run_react requires a specialist agent");
  config.validate();
  ReActTranscript transcript;
  transcript.role = config.role;
  transcript.subproblem = subproblem;

  CompletionRequest request;
  request.model = config.model;
  request.temperature = config.temperature;
  request.tools = config.tools.schema_payload();
  request.messages = {ChatMessage::system(config.full_system_prompt()),
                      ChatMessage::user("Subproblem: " + subproblem + "\n\n" +
                                        render_trial_features(record))};

  while (transcript.iteration_count < config.max_iterations) {
    auto reply = backend.complete(request);
    ++transcript.iteration_count;
    if (reply.tool_calls.empty()) {
      if (!trim(reply.content).empty()) {
        transcript.final_report = trim(reply.content);
        return transcript;
      }
      request.messages.push_back(reply);
      request.messages.push_back(ChatMessage::user("Please state your final report."));
      continue;
    }
    if (!trim(reply.content).empty()) {
      transcript.steps.push_back({TranscriptStep::Kind::kThought, trim(reply.content), {}, {}});
    }
    request.messages.push_back(reply);
    for (const auto& call : reply.tool_calls) {
      auto result = config.tools.dispatch(call);
      request.messages.push_back(ChatMessage::tool(call.id, result.content));
      transcript.steps.push_back({TranscriptStep::Kind::kToolCall, {}, call, std::move(result)});
    }
  }
  throw LoopExhaustedError(agent_title(config.role) + " reached max_iterations (" +
                               std::to_string(config.max_iterations) + ") without a final report",
                           std::move(transcript));
}

PredictionResult reason(const AgentConfig& config, const std::map<AgentRole, std::string>& reports,
                        const TrialRecord& record, LLMBackend& backend) {
  if (config.role != AgentRole::kReasoning) throw Error("reason requires the reasoning agent");
  config.validate();
  std::ostringstream user;
  user << problem_statement(record) << "\n\nSpecialist reports:";
  int n = 1;
  for (auto role : kSpecialistRoles) {
    const auto it = reports.find(role);
    if (it == reports.end()) throw Error("missing report from the " + agent_title(role));
    user << "\n" << n++ << ". " << agent_title(role) << ": " << it->second;
  }
  user << "\n\nWeigh the reports and draw a conclusion. The final line of your answer must be "
          "`Prediction: <number between 0 and 1>`, the probability that the trial succeeds.";

  CompletionRequest request;
  request.model = config.model;
  request.temperature = config.temperature;
  request.messages = {ChatMessage::system(config.full_system_prompt()),
                      ChatMessage::user(user.str())};
  const auto reply = backend.complete(request);
  const auto p = extract_probability(reply.content);
  if (!p) throw ExtractionError(reply.content);

  PredictionResult result;
  result.trial_id = record.trial_id;
  result.probability = *p;
  result.decision = decide(*p);
  result.subproblem_reports = reports;
  result.reasoning_text = reply.content;
  return result;
}

ToolRegistry registry_for_role(AgentRole role, const KnowledgeBundle& bundle,
                               const TrialRecord& record) {
  ToolRegistry reg;
  switch (role) {
    case AgentRole::kEnrollment:
      if (!bundle.enrollment) throw InputError("no enrollment predictor configured");
      reg.add(make_enrollment_prediction_model(*bundle.enrollment, record));
      break;
    case AgentRole::kSafety:
      reg.add(make_drug_historical_statistics(bundle.drug_outcomes));
      reg.add(make_disease_historical_statistics(bundle.disease_outcomes));
      break;
    case AgentRole::kEfficacy:
      reg.add(make_retrieval_hetionet(bundle.graph, bundle.bounds));
      reg.add(make_retrieval_drugbank(bundle.drugs));
      break;
    case AgentRole::kPlanning:
    case AgentRole::kReasoning:
      break;
  }
  return reg;
}

AgentConfig make_agent_config(AgentRole role, const KnowledgeBundle& bundle,
                              const TrialRecord& record) {
  AgentConfig config;
  config.role = role;
  if (const auto it = bundle.prompts.system.find(role); it != bundle.prompts.system.end()) {
    config.system_prompt = it->second;
  }
  if (const auto it = bundle.prompts.exemplars.find(role); it != bundle.prompts.exemplars.end()) {
    config.exemplars = it->second;
  }
  config.tools = registry_for_role(role, bundle, record);
  config.max_iterations = bundle.max_iterations;
  config.model = bundle.model;
  return config;
}

PredictionResult predict(const TrialRecord& record, const KnowledgeBundle& bundle,
                         LLMBackend& backend) {
  record.validate();
  std::map<AgentRole, ReActTranscript> done;
  Plan the_plan;
  try {
    the_plan = plan(make_agent_config(AgentRole::kPlanning, bundle, record), record, backend);
  } catch (const std::exception& e) {
    throw PipelineError(std::string("planning failed: ") + e.what(), {});
  }

  std::map<AgentRole, AgentConfig> configs;
  for (auto role : kSpecialistRoles) configs.emplace(role, make_agent_config(role, bundle, record));

  auto run_one = [&](AgentRole role) {
    return run_react(configs.at(role), the_plan.for_role(role).statement, record, backend);
  };

  std::map<AgentRole, std::string> failures;
  if (bundle.concurrent_specialists) {
    std::map<AgentRole, std::future<ReActTranscript>> futures;
    for (auto role : kSpecialistRoles) {
      futures.emplace(role, std::async(std::launch::async, run_one, role));
    }
    for (auto& [role, fut] : futures) {
      try {
        done.emplace(role, fut.get());
      } catch (const LoopExhaustedError& e) {
        done.emplace(role, e.transcript());
        failures.emplace(role, e.what());
      } catch (const std::exception& e) {
        failures.emplace(role, e.what());
      }
    }
  } else {
    for (auto role : kSpecialistRoles) {
      try {
        done.emplace(role, run_one(role));
      } catch (const LoopExhaustedError& e) {
        done.emplace(role, e.transcript());
        failures.emplace(role, e.what());
      } catch (const std::exception& e) {
        failures.emplace(role, e.what());
      }
    }
  }
  if (!failures.empty()) {
    std::string msg = "specialist stage failed:";
    for (const auto& [role, what] : failures) msg += " [" + agent_title(role) + "] " + what;
    throw PipelineError(msg, std::move(done));
  }

  std::map<AgentRole, std::string> reports;
  for (const auto& [role, t] : done) reports.emplace(role, t.final_report);
  PredictionResult result;
  try {
    result = reason(make_agent_config(AgentRole::kReasoning, bundle, record), reports, record, backend);
  } catch (const ExtractionError& e) {
    throw PipelineError(std::string("reasoning failed: ") + e.what() + "; raw text: " + e.raw_text(),
                        std::move(done));
  } catch (const std::exception& e) {
    throw PipelineError(std::string("reasoning failed: ") + e.what(), std::move(done));
  }
  result.transcripts = std::move(done);
  result.plan = std::move(the_plan);
  return result;
}

}  // namespace clinagent
