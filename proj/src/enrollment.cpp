#include "clinagent/enrollment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "clinagent/error.hpp"
#include "clinagent/text.hpp"

namespace clinagent {

using nlohmann::json;

void FeatureVector::add(std::size_t index, double value) {
  if (index >= dimension_) throw Error("feature index out of range");
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const auto& e, std::size_t i) { return e.first < i; });
  if (it != entries_.end() && it->first == index) {
    it->second += value;
    if (it->second == 0.0) entries_.erase(it);
  } else if (value != 0.0) {
    entries_.insert(it, {index, value});
  }
}

double FeatureVector::at(std::size_t index) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const auto& e, std::size_t i) { return e.first < i; });
  return it != entries_.end() && it->first == index ? it->second : 0.0;
}

double FeatureVector::dot(std::span<const double> weights) const {
  double s = 0.0;
  for (const auto& [i, v] : entries_) s += weights[i] * v;
  return s;
}

std::vector<double> FeatureVector::to_dense() const {
  std::vector<double> out(dimension_, 0.0);
  for (const auto& [i, v] : entries_) out[i] = v;
  return out;
}

FeatureVector FeatureVector::from_dense(std::span<const double> values) {
  FeatureVector fv(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0) fv.entries_.emplace_back(i, values[i]);
  }
  return fv;
}

std::size_t token_bucket(std::string_view token) {
  return static_cast<std::size_t>(fnv1a64(token) % kHashBuckets);
}

FeatureVector featurize(const SegmentedCriteria& criteria, const std::vector<std::string>& drugs,
                        const std::vector<std::string>& diseases) {
  FeatureVector fv(kFeatureDim);
  std::size_t characters = 0;
  const auto add_text = [&](const std::string& text, double sign) {
    for (const auto& tok : tokenize(text)) fv.add(token_bucket(tok), sign);
  };
  for (const auto& c : criteria.inclusion) {
    add_text(c, +1.0);
    characters += code_point_length(c);
  }
  for (const auto& c : criteria.exclusion) {
    add_text(c, -1.0);
    characters += code_point_length(c);
  }
  for (const auto& d : drugs) add_text(d, +1.0);
  for (const auto& d : diseases) add_text(d, +1.0);
  fv.add(kHashBuckets + 0, static_cast<double>(criteria.inclusion.size()));
  fv.add(kHashBuckets + 1, static_cast<double>(criteria.exclusion.size()));
  fv.add(kHashBuckets + 2, static_cast<double>(characters) / 1000.0);
  return fv;
}

FeatureVector featurize(const TrialRecord& record) {
  return featurize(segment_criteria(record.criteria), record.drugs, record.diseases);
}

json EnrollmentModel::to_json() const {
  json sparse = json::array();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] != 0.0) sparse.push_back({i, weights[i]});
  }
  return {{"version", version}, {"dimension", weights.size()}, {"weights", std::move(sparse)},
          {"bias", bias}, {"provenance", provenance}};
}

EnrollmentModel EnrollmentModel::from_json(const json& j) {
  EnrollmentModel m;
  try {
    m.version = j.at("version").get<int>();
    if (m.version != kFeatureSpecVersion) {
      throw InputError("unsupported enrollment model version " + std::to_string(m.version));
    }
    m.weights.assign(j.value("dimension", kFeatureDim), 0.0);
    for (const auto& pair : j.at("weights")) {
      const auto idx = pair.at(0).get<std::size_t>();
      const auto val = pair.at(1).get<double>();
      if (idx >= m.weights.size()) throw InputError("weight index out of range");
      if (!std::isfinite(val)) throw InputError("non-finite weight");
      m.weights[idx] = val;
    }
    m.bias = j.at("bias").get<double>();
    if (!std::isfinite(m.bias)) throw InputError("non-finite bias");
    m.provenance = j.value("provenance", json::object());
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid enrollment model: ") + e.what());
  }
  return m;
}

EnrollmentModel EnrollmentModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open enrollment model " + path.string());
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InputError("enrollment model " + path.string() + " is not JSON");
  return from_json(j);
}

void EnrollmentModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write enrollment model " + path.string());
  out << to_json().dump(2) << '\n';
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

LogisticObjective::LogisticObjective(std::vector<FeatureVector> features, std::vector<int> labels,
                                     double l2)
    : features_(std::move(features)), labels_(std::move(labels)), l2_(l2) {
  if (features_.size() != labels_.size()) throw Error("features and labels differ in length");
  const auto n = static_cast<double>(labels_.size());
  const auto positives = static_cast<double>(std::count(labels_.begin(), labels_.end(), 1));
  const double negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw Error("training data must contain both classes");
  }
  class_weight_.reserve(labels_.size());
  for (int y : labels_) class_weight_.push_back(n / (2.0 * (y == 1 ? positives : negatives)));
}

double LogisticObjective::loss(std::span<const double> weights, double bias) const {
  double total = 0.0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const double z = features_[i].dot(weights) + bias;
    total += class_weight_[i] * (labels_[i] == 1 ? softplus(-z) : softplus(z));
  }
  const double norm2 = std::inner_product(weights.begin(), weights.end(), weights.begin(), 0.0);
  return total / static_cast<double>(labels_.size()) + 0.5 * l2_ * norm2;
}

double LogisticObjective::gradient(std::span<const double> weights, double bias,
                                   std::vector<double>& grad_w) const {
  grad_w.assign(weights.size(), 0.0);
  const double n = static_cast<double>(labels_.size());
  double grad_b = 0.0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const double p = sigmoid(features_[i].dot(weights) + bias);
    const double dz = class_weight_[i] * (p - labels_[i]) / n;
    for (const auto& [j, v] : features_[i].entries()) grad_w[j] += dz * v;
    grad_b += dz;
  }
  for (std::size_t j = 0; j < weights.size(); ++j) grad_w[j] += l2_ * weights[j];
  return grad_b;
}

EnrollmentModel train_logistic(const LogisticObjective& objective, std::size_t dimension,
                               const TrainingOptions& options, TrainingReport* report) {
  EnrollmentModel model;
  model.weights.assign(dimension, 0.0);
  model.bias = 0.0;
  std::vector<double> grad;
  std::vector<double> candidate(dimension);
  double current = objective.loss(model.weights, model.bias);
  std::vector<double> history{current};

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double grad_b = objective.gradient(model.weights, model.bias, grad);
    double step = options.learning_rate;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      for (std::size_t j = 0; j < dimension; ++j) candidate[j] = model.weights[j] - step * grad[j];
      const double cand_bias = model.bias - step * grad_b;
      const double cand_loss = objective.loss(candidate, cand_bias);
      if (cand_loss <= current) {
        model.weights.swap(candidate);
        model.bias = cand_bias;
        current = cand_loss;
        break;
      }
    }
    history.push_back(current);
  }

  if (report) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < objective.size(); ++i) {
      const double p = sigmoid(objective.features()[i].dot(model.weights) + model.bias);
      correct += static_cast<std::size_t>((p >= 0.5 ? 1 : 0) == objective.labels()[i]);
    }
    report->training_accuracy = static_cast<double>(correct) / static_cast<double>(objective.size());
    report->loss_history = std::move(history);
  }
  return model;
}

EnrollmentModel train_enrollment(const std::vector<TrialRecord>& records,
                                 const TrainingOptions& options, TrainingReport* report) {
  if (records.size() < 2) throw InputError("enrollment training needs at least two labeled trials");
  std::vector<FeatureVector> features;
  std::vector<int> labels;
  bool used_proxy = false;
  for (const auto& rec : records) {
    std::optional<int> y = rec.enroll_label;
    if (!y) {
      y = rec.label;
      used_proxy = true;
    }
    if (!y) throw InputError("trial " + rec.trial_id + " has neither enroll_label nor label");
    features.push_back(featurize(rec));
    labels.push_back(*y);
  }
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  LogisticObjective objective(std::move(features), std::move(labels), options.l2);
  TrainingReport local;
  auto model = train_logistic(objective, kFeatureDim, options, &local);
  model.provenance = {
      {"kind", "reference hashed-feature logistic regression"},
      {"label_source", used_proxy ? "trial outcome label (enroll_label missing)" : "enroll_label"},
      {"examples", records.size()},
      {"positives", positives},
      {"learning_rate", options.learning_rate},
      {"epochs", options.epochs},
      {"l2", options.l2},
      {"training_accuracy", local.training_accuracy},
  };
  if (report) *report = std::move(local);
  return model;
}

double predict_enrollment(const EnrollmentModel& model, const TrialRecord& record) {
  return sigmoid(featurize(record).dot(model.weights) + model.bias);
}

double ReferenceEnrollmentPredictor::success_probability(const TrialRecord& record) const {
  return predict_enrollment(model_, record);
}

ExternalEnrollmentPredictor::ExternalEnrollmentPredictor(std::string url, RetryPolicy retry)
    : url_(std::move(url)), retry_(std::move(retry)) {}

double ExternalEnrollmentPredictor::success_probability(const TrialRecord& record) const {
  const json body = {{"trial_id", record.trial_id},
                     {"drugs", record.drugs},
                     {"diseases", record.diseases},
                     {"criteria", record.criteria}};
  const auto reply = post_json(url_, "", body, "", retry_);
  if (!reply.contains("probability") || !reply["probability"].is_number()) {
    throw Error("enrollment service reply lacks a numeric probability");
  }
  const double p = reply["probability"].get<double>();
  if (!(p >= 0.0 && p <= 1.0)) throw Error("enrollment service probability outside [0, 1]");
  return p;
}

}  // namespace clinagent
