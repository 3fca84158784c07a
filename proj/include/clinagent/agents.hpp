#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clinagent/chat.hpp"
#include "clinagent/enrollment.hpp"
#include "clinagent/knowledge.hpp"
#include "clinagent/prompts.hpp"
#include "clinagent/risk.hpp"
#include "clinagent/tools.hpp"
#include "clinagent/trial.hpp"

namespace clinagent {

inline constexpr int kDefaultMaxIterations = 8;
inline constexpr double kDecisionThreshold = 0.5;

struct AgentConfig {
  AgentRole role = AgentRole::kPlanning;
  std::string system_prompt;
  std::vector<Exemplar> exemplars;
  ToolRegistry tools;
  int max_iterations = kDefaultMaxIterations;
  std::string model = "gpt-4";
  double temperature = 0.0;

  /// Specialists need tools; planning and reasoning must have none.
  void validate() const;
  /// Role prompt followed by the rendered few-shot exemplars.
  std::string full_system_prompt() const;
};

struct Subproblem {
  AgentRole assignee;
  std::string statement;

  bool operator==(const Subproblem&) const = default;
};

struct Plan {
  std::vector<Subproblem> subproblems;
  bool fallback = false;  // canonical plan substituted for an unusable reply
  std::string raw_reply;

  const Subproblem& for_role(AgentRole role) const;
};

struct TranscriptStep {
  enum class Kind { kThought, kToolCall };
  Kind kind = Kind::kThought;
  std::string thought;
  ToolCallRequest call;
  ToolResult result;
};

struct ReActTranscript {
  AgentRole role = AgentRole::kEnrollment;
  std::string subproblem;
  std::vector<TranscriptStep> steps;
  std::string final_report;
  int iteration_count = 0;

  nlohmann::json to_json() const;
  /// All text the transcript carries (thoughts, calls, observations, report).
  std::string flatten() const;
};

struct PredictionResult {
  std::string trial_id;
  double probability = 0.0;
  int decision = 0;
  std::map<AgentRole, std::string> subproblem_reports;
  std::map<AgentRole, ReActTranscript> transcripts;
  std::string reasoning_text;
  Plan plan;

  nlohmann::json to_json() const;
};

class LoopExhaustedError : public Error {
 public:
  LoopExhaustedError(const std::string& what, ReActTranscript transcript)
      : Error(what), transcript_(std::move(transcript)) {}
  const ReActTranscript& transcript() const noexcept { return transcript_; }

 private:
  ReActTranscript transcript_;
};

class ExtractionError : public Error {
 public:
  explicit ExtractionError(std::string raw_text)
      : Error("no prediction probability found in reasoning output"), raw_text_(std::move(raw_text)) {}
  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

/// A pipeline stage failed; carries whatever transcripts had completed.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& what, std::map<AgentRole, ReActTranscript> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::map<AgentRole, ReActTranscript>& partial() const noexcept { return partial_; }
  nlohmann::json partial_json() const;

 private:
  std::map<AgentRole, ReActTranscript> partial_;
};

/// Decision rule: 1 when probability >= 0.5.
int decide(double probability);

/// Last `Prediction: <x>` in the text, else the last standalone number in
/// the final non-empty line. Values outside [0, 1] are failures.
std::optional<double> extract_probability(std::string_view text);

/// Keyword routing of one subproblem statement to a specialist.
std::optional<AgentRole> route_subproblem(std::string_view statement);

/// Parses a numbered list into a plan; nullopt unless the items cover the
/// three specialists exactly once each.
std::optional<Plan> parse_plan(std::string_view reply);

/// The three canonical subproblems, parameterized by the trial's names.
Plan canonical_plan(const TrialRecord& record);

Plan plan(const AgentConfig& config, const TrialRecord& record, LLMBackend& backend);

/// Throws LoopExhaustedError (with the transcript) when max_iterations
/// completions pass without a final report.
ReActTranscript run_react(const AgentConfig& config, const std::string& subproblem,
                          const TrialRecord& record, LLMBackend& backend);

/// Throws ExtractionError when the reply has no usable probability.
PredictionResult reason(const AgentConfig& config, const std::map<AgentRole, std::string>& reports,
                        const TrialRecord& record, LLMBackend& backend);

/// Everything the pipeline reads. Shared read-only across concurrent trials.
struct KnowledgeBundle {
  DrugStore drugs;
  HetioGraph graph;
  OutcomeTable drug_outcomes{EntityKind::kDrug};
  OutcomeTable disease_outcomes{EntityKind::kDisease};
  std::shared_ptr<const EnrollmentPredictor> enrollment;
  PathBounds bounds;
  PromptSet prompts;
  std::string model = "gpt-4";
  int max_iterations = kDefaultMaxIterations;
  bool concurrent_specialists = true;
};

/// Per-role tools bound to `record`: enrollment -> enrollment model; safety
/// -> drug and disease statistics; efficacy -> Hetionet and DrugBank.
ToolRegistry registry_for_role(AgentRole role, const KnowledgeBundle& bundle,
                               const TrialRecord& record);

AgentConfig make_agent_config(AgentRole role, const KnowledgeBundle& bundle,
                              const TrialRecord& record);

/// plan -> three specialist ReAct loops -> reason. Stage failures surface
/// as PipelineError with the transcripts gathered so far.
PredictionResult predict(const TrialRecord& record, const KnowledgeBundle& bundle,
                         LLMBackend& backend);

}  // namespace clinagent
