#include "clinagent/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace clinagent {

using nlohmann::json;

json MetricsReport::to_json() const {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"n", n},
          {"positives", positives},
          {"failures", failures},
          {"accuracy", accuracy},
          {"roc_auc", opt(roc_auc)},
          {"pr_auc", opt(pr_auc)},
          {"precision", precision},
          {"recall", recall},
          {"f1", f1}};
}

MetricsReport compute_metrics(const std::vector<ScoredExample>& examples, double threshold) {
  if (examples.empty()) throw Error("cannot compute metrics over zero examples");
  MetricsReport m;
  m.n = examples.size();
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (const auto& e : examples) {
    if (e.label != 0 && e.label != 1) throw Error("label must be 0 or 1 for " + e.trial_id);
    if (!(e.score >= 0.0 && e.score <= 1.0)) throw Error("score outside [0, 1] for " + e.trial_id);
    const int decision = e.score >= threshold ? 1 : 0;
    m.positives += static_cast<std::size_t>(e.label);
    correct += static_cast<std::size_t>(decision == e.label);
    tp += static_cast<std::size_t>(decision == 1 && e.label == 1);
    fp += static_cast<std::size_t>(decision == 1 && e.label == 0);
    fn += static_cast<std::size_t>(decision == 0 && e.label == 1);
  }
  const auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  m.accuracy = ratio(correct, m.n);
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0
                                       : 2.0 * m.precision * m.recall / (m.precision + m.recall);

  const std::size_t negatives = m.n - m.positives;
  if (m.positives == 0 || negatives == 0) return m;

  // Sort ascending by score; tied groups receive their average rank.
  std::vector<const ScoredExample*> order;
  for (const auto& e : examples) order.push_back(&e);
  std::sort(order.begin(), order.end(),
            [](const ScoredExample* a, const ScoredExample* b) { return a->score < b->score; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && order[j]->score == order[i]->score) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (order[k]->label == 1) positive_rank_sum += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(m.positives);
  const double q = static_cast<double>(negatives);
  m.roc_auc = (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);

  std::sort(order.begin(), order.end(), [](const ScoredExample* a, const ScoredExample* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->trial_id < b->trial_id;
  });
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (order[k]->label != 1) continue;
    ++hits;
    ap += (static_cast<double>(hits) / static_cast<double>(k + 1)) / p;
  }
  m.pr_auc = ap;
  return m;
}

EvaluationRun evaluate_dataset(const std::vector<TrialRecord>& records, const PredictFn& pipeline,
                               int parallelism, double threshold) {
  if (parallelism < 1) throw InputError("parallelism must be >= 1");
  for (const auto& r : records) {
    if (!r.label) throw InputError("trial " + r.trial_id + " has no outcome label");
  }
  std::vector<TrialOutcome> outcomes(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      auto& out = outcomes[i];
      out.trial_id = records[i].trial_id;
      out.label = records[i].label;
      try {
        out.result = pipeline(records[i]);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism),
                                             std::max<std::size_t>(records.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::stable_sort(outcomes.begin(), outcomes.end(),
                   [](const TrialOutcome& a, const TrialOutcome& b) { return a.trial_id < b.trial_id; });
  EvaluationRun run;
  std::vector<ScoredExample> scored;
  for (const auto& o : outcomes) {
    if (o.result) {
      scored.push_back({o.trial_id, o.result->probability, *o.label});
    } else {
      run.failed_ids.push_back(o.trial_id);
    }
  }
  if (scored.empty()) throw Error("every trial failed; no metrics to report");
  run.metrics = compute_metrics(scored, threshold);
  run.metrics.failures = run.failed_ids.size();
  run.outcomes = std::move(outcomes);
  return run;
}

}  // namespace clinagent
