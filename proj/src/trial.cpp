#include "clinagent/trial.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <iterator>
#include <map>
#include <sstream>

#include "clinagent/error.hpp"
#include "clinagent/text.hpp"

namespace clinagent {

namespace {

constexpr std::string_view kInclusionHeader = "inclusion criteria";
constexpr std::string_view kExclusionHeader = "exclusion criteria";

const std::vector<std::string> kRequiredColumns = {"trial_id", "phase",    "drugs",
                                                   "diseases", "criteria", "label"};

// RFC 4180 reader. Returns records with the 1-based line number each starts on.
struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<CsvRecord> read_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{};
    current.line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        ++line;
        end_record();
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw RowError(current.line, "unterminated quoted field");
  if (!field.empty() || !current.fields.empty()) end_record();
  return records;
}

std::string csv_escape(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::vector<std::string> split_entities(std::string_view cell) {
  std::vector<std::string> out;
  for (const auto& part : split(cell, ';')) {
    auto t = trim(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::optional<int> parse_binary(std::string_view cell, std::size_t line, const char* column) {
  const auto t = trim(cell);
  if (t.empty()) return std::nullopt;
  if (t == "0") return 0;
  if (t == "1") return 1;
  throw RowError(line, std::string(column) + " must be 0, 1 or empty, got '" + t + "'");
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

struct HeaderHit {
  std::size_t pos;
  std::size_t len;
  bool inclusion;
};

std::vector<HeaderHit> find_headers(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  std::vector<HeaderHit> hits;
  for (const auto& [needle, inclusion] :
       {std::pair{kInclusionHeader, true}, std::pair{kExclusionHeader, false}}) {
    for (auto pos = lower.find(needle); pos != std::string::npos;
         pos = lower.find(needle, pos + needle.size())) {
      hits.push_back({pos, needle.size(), inclusion});
    }
  }
  std::sort(hits.begin(), hits.end(),
            [](const HeaderHit& a, const HeaderHit& b) { return a.pos < b.pos; });
  return hits;
}

// Strips one leading bullet marker: "-", "*", "•", or digits followed by
// '.' or ')'. A marker must be followed by whitespace or end of line.
std::string_view strip_bullet(std::string_view line) {
  auto followed_by_space = [&](std::size_t n) {
    return n == line.size() || std::isspace(static_cast<unsigned char>(line[n]));
  };
  if (!line.empty() && (line[0] == '-' || line[0] == '*') && followed_by_space(1)) {
    return line.substr(1);
  }
  if (line.substr(0, 3) == "\xE2\x80\xA2" && followed_by_space(3)) return line.substr(3);
  std::size_t n = 0;
  while (n < line.size() && std::isdigit(static_cast<unsigned char>(line[n]))) ++n;
  if (n > 0 && n < line.size() && (line[n] == '.' || line[n] == ')') && followed_by_space(n + 1)) {
    return line.substr(n + 1);
  }
  return line;
}

void append_clauses(std::string_view section, std::vector<std::string>& out) {
  // A header is usually followed by ':'; drop it along with the header.
  auto first = section.find_first_not_of(" \t");
  if (first != std::string_view::npos && section[first] == ':') section.remove_prefix(first + 1);
  for (const auto& raw : split(section, '\n')) {
    auto clause = trim(strip_bullet(trim(raw)));
    if (!clause.empty()) out.push_back(std::move(clause));
  }
}

}  // namespace

Phase parse_phase(std::string_view text) {
  auto t = to_lower_ascii(trim(text));
  if (t.rfind("phase", 0) == 0) t = trim(std::string_view(t).substr(5));
  if (t == "1") return Phase::kPhase1;
  if (t == "2") return Phase::kPhase2;
  if (t == "3") return Phase::kPhase3;
  if (t == "4") return Phase::kPhase4;
  return Phase::kUnknown;
}

std::string phase_name(Phase phase) {
  switch (phase) {
    case Phase::kPhase1: return "phase 1";
    case Phase::kPhase2: return "phase 2";
    case Phase::kPhase3: return "phase 3";
    case Phase::kPhase4: return "phase 4";
    case Phase::kUnknown: break;
  }
  return "unknown";
}

void TrialRecord::validate() const {
  const auto nonblank = [](const std::string& s) { return !trim(s).empty(); };
  if (trim(trial_id).empty()) throw InputError("trial has an empty trial_id");
  if (drugs.empty() || !std::all_of(drugs.begin(), drugs.end(), nonblank)) {
    throw InputError("trial " + trial_id + " has no drugs");
  }
  if (diseases.empty() || !std::all_of(diseases.begin(), diseases.end(), nonblank)) {
    throw InputError("trial " + trial_id + " has no diseases");
  }
  for (const auto& lbl : {label, enroll_label}) {
    if (lbl && *lbl != 0 && *lbl != 1) {
      throw InputError("trial " + trial_id + " has a non-binary label");
    }
  }
}

IngestReport parse_trial_dataset(std::istream& source, IngestMode mode) {
  const std::string text{std::istreambuf_iterator<char>(source), std::istreambuf_iterator<char>()};
  auto rows = read_csv(text);
  IngestReport report;
  if (rows.empty()) throw SchemaError(kRequiredColumns.front());

  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < rows[0].fields.size(); ++i) {
    column.emplace(trim(rows[0].fields[i]), i);
  }
  for (const auto& name : kRequiredColumns) {
    if (!column.count(name)) throw SchemaError(name);
  }
  const auto enroll_it = column.find("enroll_label");

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    try {
      if (row.fields.size() != rows[0].fields.size()) {
        throw RowError(row.line, "expected " + std::to_string(rows[0].fields.size()) +
                                     " fields, got " + std::to_string(row.fields.size()));
      }
      TrialRecord rec;
      rec.trial_id = trim(row.fields[column["trial_id"]]);
      rec.phase = parse_phase(row.fields[column["phase"]]);
      rec.drugs = split_entities(row.fields[column["drugs"]]);
      rec.diseases = split_entities(row.fields[column["diseases"]]);
      rec.criteria = row.fields[column["criteria"]];
      rec.label = parse_binary(row.fields[column["label"]], row.line, "label");
      if (enroll_it != column.end()) {
        rec.enroll_label = parse_binary(row.fields[enroll_it->second], row.line, "enroll_label");
      }
      if (rec.trial_id.empty()) throw RowError(row.line, "empty trial_id");
      if (rec.drugs.empty()) throw RowError(row.line, "empty drugs");
      if (rec.diseases.empty()) throw RowError(row.line, "empty diseases");
      report.records.push_back(std::move(rec));
    } catch (const RowError& e) {
      if (mode == IngestMode::kStrict) throw;
      report.skipped.emplace_back(e.what());
    }
  }
  return report;
}

std::vector<TrialRecord> parse_trial_dataset(std::string_view csv, IngestMode mode) {
  std::istringstream in{std::string(csv)};
  return parse_trial_dataset(in, mode).records;
}

std::string serialize_trial_dataset(const std::vector<TrialRecord>& records) {
  const bool with_enroll = std::any_of(records.begin(), records.end(),
                                       [](const TrialRecord& r) { return r.enroll_label.has_value(); });
  std::string out = "trial_id,phase,drugs,diseases,criteria,label";
  if (with_enroll) out += ",enroll_label";
  out += '\n';
  const auto label_text = [](const std::optional<int>& l) {
    return l ? std::to_string(*l) : std::string();
  };
  for (const auto& r : records) {
    out += csv_escape(r.trial_id) + ',' + csv_escape(phase_name(r.phase)) + ',' +
           csv_escape(join(r.drugs, ";")) + ',' + csv_escape(join(r.diseases, ";")) + ',' +
           csv_escape(r.criteria) + ',' + label_text(r.label);
    if (with_enroll) out += ',' + label_text(r.enroll_label);
    out += '\n';
  }
  return out;
}

SegmentedCriteria segment_criteria(std::string_view criteria) {
  SegmentedCriteria out;
  const auto hits = find_headers(criteria);
  const std::size_t preamble_end = hits.empty() ? criteria.size() : hits.front().pos;
  append_clauses(criteria.substr(0, preamble_end), out.inclusion);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const std::size_t begin = hits[i].pos + hits[i].len;
    const std::size_t end = i + 1 < hits.size() ? hits[i + 1].pos : criteria.size();
    append_clauses(criteria.substr(begin, end - begin),
                   hits[i].inclusion ? out.inclusion : out.exclusion);
  }
  return out;
}

std::string render_criteria(const SegmentedCriteria& segmented) {
  std::string out;
  if (!segmented.inclusion.empty()) {
    out += "Inclusion Criteria:\n";
    for (const auto& c : segmented.inclusion) out += "- " + c + "\n";
  }
  if (!segmented.exclusion.empty()) {
    out += "Exclusion Criteria:\n";
    for (const auto& c : segmented.exclusion) out += "- " + c + "\n";
  }
  return out;
}

nlohmann::json to_json(const TrialRecord& record) {
  nlohmann::json j = {
      {"trial_id", record.trial_id},
      {"phase", phase_name(record.phase)},
      {"drugs", record.drugs},
      {"diseases", record.diseases},
      {"criteria", record.criteria},
      {"label", record.label ? nlohmann::json(*record.label) : nlohmann::json(nullptr)},
  };
  if (record.enroll_label) j["enroll_label"] = *record.enroll_label;
  return j;
}

TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord rec;
  try {
    rec.trial_id = j.at("trial_id").get<std::string>();
    rec.phase = parse_phase(j.value("phase", std::string("unknown")));
    rec.drugs = j.at("drugs").get<std::vector<std::string>>();
    rec.diseases = j.at("diseases").get<std::vector<std::string>>();
    rec.criteria = j.value("criteria", std::string());
    if (j.contains("label") && !j["label"].is_null()) rec.label = j["label"].get<int>();
    if (j.contains("enroll_label") && !j["enroll_label"].is_null()) {
      rec.enroll_label = j["enroll_label"].get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid trial JSON: ") + e.what());
  }
  rec.validate();
  return rec;
}

std::string render_trial_features(const TrialRecord& record) {
  const auto seg = segment_criteria(record.criteria);
  std::ostringstream out;
  out << "Trial " << record.trial_id << " (" << phase_name(record.phase) << ").\n"
      << "Features contain (1) drug: " << join(record.drugs, "; ") << ";\n"
      << "(2) disease: " << join(record.diseases, "; ") << ";\n"
      << "(3) inclusion criteria:";
  for (const auto& c : seg.inclusion) out << "\n- " << c;
  out << "\n(4) exclusion criteria:";
  for (const auto& c : seg.exclusion) out << "\n- " << c;
  return out.str();
}

}  // namespace clinagent
