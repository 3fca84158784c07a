#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clinagent/agents.hpp"
#include "clinagent/trial.hpp"

namespace clinagent {

struct ScoredExample {
  std::string trial_id;
  double score;
  int label;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::optional<double> roc_auc;  // undefined when only one class is present
  std::optional<double> pr_auc;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n = 0;
  std::size_t positives = 0;
  std::size_t failures = 0;

  nlohmann::json to_json() const;
};

/// Threshold metrics use decision = score >= threshold. ROC-AUC is the
/// Mann-Whitney statistic (ties 0.5); PR-AUC is average precision over the
/// ranking by descending score, ties broken by trial_id.
MetricsReport compute_metrics(const std::vector<ScoredExample>& examples, double threshold = 0.5);

struct TrialOutcome {
  std::string trial_id;
  std::optional<PredictionResult> result;
  std::string error;
  std::optional<int> label;
};

struct EvaluationRun {
  MetricsReport metrics;
  std::vector<TrialOutcome> outcomes;  // sorted by trial_id
  std::vector<std::string> failed_ids;
};

using PredictFn = std::function<PredictionResult(const TrialRecord&)>;

/// Runs `pipeline` over labeled records with at most `parallelism` workers.
/// Failed trials are excluded from the metrics and counted. Throws Error
/// when every trial fails.
EvaluationRun evaluate_dataset(const std::vector<TrialRecord>& records, const PredictFn& pipeline,
                               int parallelism, double threshold = 0.5);

}  // namespace clinagent
