#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "clinagent/http_backend.hpp"
#include "clinagent/trial.hpp"

namespace clinagent {

inline constexpr std::size_t kHashBuckets = std::size_t{1} << 16;
inline constexpr std::size_t kFeatureDim = kHashBuckets + 3;
inline constexpr int kFeatureSpecVersion = 1;

/// Sparse real vector: sorted (index, value) pairs with no zero values.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::size_t dimension) : dimension_(dimension) {}

  void add(std::size_t index, double value);
  double at(std::size_t index) const;
  double dot(std::span<const double> weights) const;
  std::size_t dimension() const { return dimension_; }
  std::size_t nonzero_count() const { return entries_.size(); }
  const std::vector<std::pair<std::size_t, double>>& entries() const { return entries_; }
  std::vector<double> to_dense() const;

  static FeatureVector from_dense(std::span<const double> values);

 private:
  std::size_t dimension_ = 0;
  std::vector<std::pair<std::size_t, double>> entries_;
};

/// Bucket of a token: 64-bit FNV-1a mod 2^16.
std::size_t token_bucket(std::string_view token);

/// Hashed bag of words (inclusion +1, exclusion -1, entity names +1) plus
/// dense [inclusion clause count, exclusion clause count, criteria
/// characters / 1000] at indices 2^16, 2^16+1, 2^16+2.
FeatureVector featurize(const SegmentedCriteria& criteria, const std::vector<std::string>& drugs,
                        const std::vector<std::string>& diseases);
FeatureVector featurize(const TrialRecord& record);

struct EnrollmentModel {
  std::vector<double> weights = std::vector<double>(kFeatureDim, 0.0);
  double bias = 0.0;
  int version = kFeatureSpecVersion;
  nlohmann::json provenance = nlohmann::json::object();

  nlohmann::json to_json() const;
  static EnrollmentModel from_json(const nlohmann::json& j);
  static EnrollmentModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

double sigmoid(double z);

/// Class-weighted, L2-regularized logistic loss over sparse examples:
///   sum_i c_i * CE(y_i, sigmoid(w.x_i + b)) / n + (l2 / 2) * |w|^2
/// with c_i = n / (2 * n_{y_i}). The bias is not regularized.
class LogisticObjective {
 public:
  LogisticObjective(std::vector<FeatureVector> features, std::vector<int> labels, double l2);

  double loss(std::span<const double> weights, double bias) const;
  /// Writes dL/dw into grad_w (resized to the weight dimension); returns dL/db.
  double gradient(std::span<const double> weights, double bias, std::vector<double>& grad_w) const;

  std::size_t size() const { return labels_.size(); }
  const std::vector<FeatureVector>& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  std::vector<FeatureVector> features_;
  std::vector<int> labels_;
  std::vector<double> class_weight_;
  double l2_;
};

struct TrainingOptions {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-4;
};

struct TrainingReport {
  std::vector<double> loss_history;  // loss after initialization and after each epoch
  double training_accuracy = 0.0;
};

/// Full-batch gradient descent from zero weights. A step that would raise
/// the loss is halved until it does not, so the loss never increases.
EnrollmentModel train_logistic(const LogisticObjective& objective, std::size_t dimension,
                               const TrainingOptions& options = {},
                               TrainingReport* report = nullptr);

/// Trains on featurize(record) against enroll_label, falling back to the
/// outcome label when a record has none. Throws Error on single-class data.
EnrollmentModel train_enrollment(const std::vector<TrialRecord>& records,
                                 const TrainingOptions& options = {},
                                 TrainingReport* report = nullptr);

/// Probability that the trial enrolls successfully.
double predict_enrollment(const EnrollmentModel& model, const TrialRecord& record);

class EnrollmentPredictor {
 public:
  virtual ~EnrollmentPredictor() = default;
  /// Probability of enrollment success in [0, 1].
  virtual double success_probability(const TrialRecord& record) const = 0;
};

class ReferenceEnrollmentPredictor : public EnrollmentPredictor {
 public:
  explicit ReferenceEnrollmentPredictor(EnrollmentModel model) : model_(std::move(model)) {}
  double success_probability(const TrialRecord& record) const override;

 private:
  EnrollmentModel model_;
};

/// Adapter for an externally served enrollment model: POSTs
/// {trial_id, drugs, diseases, criteria} and reads {probability}.
class ExternalEnrollmentPredictor : public EnrollmentPredictor {
 public:
  ExternalEnrollmentPredictor(std::string url, RetryPolicy retry = {});
  double success_probability(const TrialRecord& record) const override;

 private:
  std::string url_;
  RetryPolicy retry_;
};

}  // namespace clinagent
