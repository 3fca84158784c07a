#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clinagent/trial.hpp"

namespace clinagent {

/// Risk tables use a stricter threshold than graph resolution: a wrong
/// failure rate is worse than none.
inline constexpr double kRiskMatchThreshold = 0.8;

struct FuzzyMatch {
  std::string key;
  double similarity;
};

/// 1 - levenshtein(a', b') / max(|a'|, |b'|) over normalized names, in
/// code points. Two empty names are identical (1.0).
double name_similarity(std::string_view a, std::string_view b);

/// Best key by name_similarity with similarity >= threshold; ties go to the
/// lexicographically smallest key. Keys are expected to be normalized.
std::optional<FuzzyMatch> fuzzy_match(std::string_view query, const std::vector<std::string>& keys,
                                      double threshold = kRiskMatchThreshold);

enum class EntityKind { kDrug, kDisease };

std::string entity_kind_name(EntityKind kind);

struct OutcomeCounts {
  long success = 0;
  long total = 0;

  bool operator==(const OutcomeCounts&) const = default;
};

/// Historical trial outcomes per normalized entity name.
class OutcomeTable {
 public:
  explicit OutcomeTable(EntityKind kind = EntityKind::kDrug) : kind_(kind) {}

  EntityKind kind() const { return kind_; }
  void add(std::string_view name, int label);
  void set(std::string_view name, OutcomeCounts counts);
  const std::map<std::string, OutcomeCounts>& entries() const { return entries_; }
  std::vector<std::string> keys() const;
  bool empty() const { return entries_.empty(); }

 private:
  EntityKind kind_;
  std::map<std::string, OutcomeCounts> entries_;
};

/// Every record must be labeled; throws InputError naming the first
/// unlabeled trial. A trial counts once per distinct normalized entity.
OutcomeTable build_outcome_table(const std::vector<TrialRecord>& records, EntityKind kind);

struct RiskScore {
  double failure_rate;
  std::string matched_name;
  double match_similarity;
  long support;
};

/// Exact normalized lookup, else fuzzy_match. nullopt means no historical
/// data; callers must not substitute a prior.
std::optional<RiskScore> entity_failure_rate(const OutcomeTable& table, std::string_view name);

/// Pessimistic aggregate over several entities: the maximum failure rate
/// among known names; nullopt when none are known.
std::optional<RiskScore> trial_entity_risk(const OutcomeTable& table,
                                           const std::vector<std::string>& names);

}  // namespace clinagent
