#include "clinagent/risk.hpp"

#include <algorithm>
#include <set>

#include "clinagent/error.hpp"
#include "clinagent/text.hpp"

namespace clinagent {

double name_similarity(std::string_view a, std::string_view b) {
  const auto na = normalize_name(a);
  const auto nb = normalize_name(b);
  const auto longest = std::max(code_point_length(na), code_point_length(nb));
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(na, nb)) / static_cast<double>(longest);
}

std::optional<FuzzyMatch> fuzzy_match(std::string_view query, const std::vector<std::string>& keys,
                                      double threshold) {
  const auto q = normalize_name(query);
  const auto q_len = code_point_length(q);
  std::optional<FuzzyMatch> best;
  for (const auto& key : keys) {
    const auto longest = std::max(q_len, code_point_length(key));
    const double sim =
        longest == 0 ? 1.0
                     : 1.0 - static_cast<double>(levenshtein(q, key)) / static_cast<double>(longest);
    if (sim < threshold) continue;
    if (!best || sim > best->similarity || (sim == best->similarity && key < best->key)) {
      best = FuzzyMatch{key, sim};
    }
  }
  return best;
}

std::string entity_kind_name(EntityKind kind) {
  return kind == EntityKind::kDrug ? "drug" : "disease";
}

void OutcomeTable::add(std::string_view name, int label) {
  const auto key = normalize_name(name);
  if (key.empty()) return;
  auto& counts = entries_[key];
  counts.total += 1;
  counts.success += label == 1 ? 1 : 0;
}

void OutcomeTable::set(std::string_view name, OutcomeCounts counts) {
  if (counts.total < 1 || counts.success < 0 || counts.success > counts.total) {
    throw InputError("invalid outcome counts for '" + std::string(name) + "'");
  }
  entries_[normalize_name(name)] = counts;
}

std::vector<std::string> OutcomeTable::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

OutcomeTable build_outcome_table(const std::vector<TrialRecord>& records, EntityKind kind) {
  OutcomeTable table(kind);
  for (const auto& rec : records) {
    if (!rec.label) throw InputError("trial " + rec.trial_id + " has no outcome label");
    const auto& names = kind == EntityKind::kDrug ? rec.drugs : rec.diseases;
    std::set<std::string> distinct;
    for (const auto& n : names) distinct.insert(normalize_name(n));
    for (const auto& n : distinct) table.add(n, *rec.label);
  }
  return table;
}

std::optional<RiskScore> entity_failure_rate(const OutcomeTable& table, std::string_view name) {
  const auto key = normalize_name(name);
  const auto& entries = table.entries();
  const auto score = [](const std::string& k, const OutcomeCounts& c, double sim) {
    return RiskScore{1.0 - static_cast<double>(c.success) / static_cast<double>(c.total), k, sim,
                     c.total};
  };
  if (const auto it = entries.find(key); it != entries.end()) {
    return score(it->first, it->second, 1.0);
  }
  const auto match = fuzzy_match(key, table.keys(), kRiskMatchThreshold);
  if (!match) return std::nullopt;
  return score(match->key, entries.at(match->key), match->similarity);
}

std::optional<RiskScore> trial_entity_risk(const OutcomeTable& table,
                                           const std::vector<std::string>& names) {
  std::optional<RiskScore> worst;
  for (const auto& n : names) {
    auto s = entity_failure_rate(table, n);
    if (s && (!worst || s->failure_rate > worst->failure_rate)) worst = std::move(s);
  }
  return worst;
}

}  // namespace clinagent
