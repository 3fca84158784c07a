#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace clinagent {

enum class Phase { kPhase1, kPhase2, kPhase3, kPhase4, kUnknown };

/// Accepts "phase 1".."phase 4", "1".."4", case-insensitive; anything else
/// is kUnknown.
Phase parse_phase(std::string_view text);
std::string phase_name(Phase phase);

/// One clinical trial. Immutable once validated.
struct TrialRecord {
  std::string trial_id;
  Phase phase = Phase::kUnknown;
  std::vector<std::string> drugs;
  std::vector<std::string> diseases;
  std::string criteria;
  std::optional<int> label;         // 1 = trial success
  std::optional<int> enroll_label;  // 1 = enrollment success

  /// Throws InputError when an invariant is violated.
  void validate() const;

  bool operator==(const TrialRecord&) const = default;
};

struct SegmentedCriteria {
  std::vector<std::string> inclusion;
  std::vector<std::string> exclusion;

  bool operator==(const SegmentedCriteria&) const = default;
};

enum class IngestMode { kStrict, kLenient };

struct IngestReport {
  std::vector<TrialRecord> records;
  std::vector<std::string> skipped;  // row errors tolerated in lenient mode
};

/// Reads the trial CSV (`trial_id,phase,drugs,diseases,criteria,label`, plus
/// an optional `enroll_label` column). Fields follow RFC 4180 quoting;
/// drugs/diseases are semicolon-separated.
IngestReport parse_trial_dataset(std::istream& source, IngestMode mode = IngestMode::kStrict);
std::vector<TrialRecord> parse_trial_dataset(std::string_view csv,
                                             IngestMode mode = IngestMode::kStrict);

/// Serializes records with the same column set parse_trial_dataset reads.
std::string serialize_trial_dataset(const std::vector<TrialRecord>& records);

/// Splits eligibility text into inclusion and exclusion clauses. Text with
/// no recognizable header is treated as all-inclusion.
SegmentedCriteria segment_criteria(std::string_view criteria);

/// Renders clauses back into header + bulleted text.
std::string render_criteria(const SegmentedCriteria& segmented);

nlohmann::json to_json(const TrialRecord& record);
TrialRecord trial_from_json(const nlohmann::json& j);

/// "Features contain (1) drug: ...; (2) disease: ..." block handed to agents.
std::string render_trial_features(const TrialRecord& record);

}  // namespace clinagent
