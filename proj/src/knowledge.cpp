#include "clinagent/knowledge.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <iterator>
#include <limits>
#include <sstream>

#include "clinagent/risk.hpp"
#include "clinagent/text.hpp"

namespace clinagent {

namespace {

struct TsvTable {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line, fields)
};

TsvTable read_tsv(std::istream& in) {
  TsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (t.header.empty()) {
      for (auto& f : fields) f = trim(f);
      t.header = std::move(fields);
    } else {
      t.rows.emplace_back(line_no, std::move(fields));
    }
  }
  return t;
}

std::vector<std::size_t> require_columns(const TsvTable& t, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    const auto it = std::find(t.header.begin(), t.header.end(), n);
    if (it == t.header.end()) throw SchemaError(n);
    idx.push_back(static_cast<std::size_t>(it - t.header.begin()));
  }
  return idx;
}

}  // namespace

std::string match_kind_name(MatchKind kind) { return kind == MatchKind::kExact ? "exact" : "fuzzy"; }

bool DrugStore::insert(DrugEntry entry) {
  auto key = normalize_name(entry.name);
  if (key.empty()) throw InputError("drug entry with empty name");
  return entries_.emplace(std::move(key), std::move(entry)).second;
}

std::optional<DrugMatch> DrugStore::lookup(std::string_view name, double threshold) const {
  const auto key = normalize_name(name);
  if (const auto it = entries_.find(key); it != entries_.end()) {
    return DrugMatch{it->second, MatchKind::kExact, 1.0};
  }
  std::vector<std::string> keys;
  keys.reserve(entries_.size());
  for (const auto& [k, v] : entries_) keys.push_back(k);
  const auto best = fuzzy_match(key, keys, threshold);
  if (!best) return std::nullopt;
  return DrugMatch{entries_.at(best->key), MatchKind::kFuzzy, best->similarity};
}

DrugStore load_drugbank(std::istream& source, LoadWarnings* warnings) {
  const auto table = read_tsv(source);
  const auto cols = require_columns(table, {"name", "description", "indication", "mechanism", "smiles"});
  DrugStore store;
  for (const auto& [line, fields] : table.rows) {
    const auto get = [&](std::size_t i) {
      return cols[i] < fields.size() ? fields[cols[i]] : std::string();
    };
    DrugEntry e{trim(get(0)), get(1), get(2), get(3), trim(get(4))};
    if (e.name.empty()) throw RowError(line, "drug entry with empty name");
    const std::string name = e.name;
    if (!store.insert(std::move(e)) && warnings) {
      warnings->messages.push_back("line " + std::to_string(line) + ": duplicate drug '" + name +
                                   "' ignored (first row kept)");
    }
  }
  return store;
}

NodeKind parse_node_kind(std::string_view text) {
  static const std::pair<std::string_view, NodeKind> kKinds[] = {
      {"Compound", NodeKind::kCompound},     {"Disease", NodeKind::kDisease},
      {"Gene", NodeKind::kGene},             {"Anatomy", NodeKind::kAnatomy},
      {"Pathway", NodeKind::kPathway},       {"Side Effect", NodeKind::kSideEffect},
      {"SideEffect", NodeKind::kSideEffect}, {"Symptom", NodeKind::kSymptom},
      {"Pharmacologic Class", NodeKind::kPharmacologicClass},
      {"PharmacologicClass", NodeKind::kPharmacologicClass},
  };
  for (const auto& [name, kind] : kKinds) {
    if (text == name) return kind;
  }
  return NodeKind::kOther;
}

std::string node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::kCompound: return "Compound";
    case NodeKind::kDisease: return "Disease";
    case NodeKind::kGene: return "Gene";
    case NodeKind::kAnatomy: return "Anatomy";
    case NodeKind::kPathway: return "Pathway";
    case NodeKind::kSideEffect: return "SideEffect";
    case NodeKind::kSymptom: return "Symptom";
    case NodeKind::kPharmacologicClass: return "PharmacologicClass";
    case NodeKind::kOther: break;
  }
  return "other";
}

bool HetioGraph::add_node(const std::string& id, NodeKind kind, const std::string& name) {
  if (const auto it = by_id_.find(id); it != by_id_.end()) {
    const auto& existing = nodes_[it->second];
    return existing.kind == kind && existing.name == name;
  }
  const std::size_t index = nodes_.size();
  nodes_.push_back({id, kind, name});
  adjacency_.emplace_back();
  by_id_.emplace(id, index);
  by_name_.emplace(std::pair{kind, normalize_name(name)}, index);
  return true;
}

void HetioGraph::add_edge(const std::string& source_id, const std::string& metaedge,
                          const std::string& target_id) {
  const auto s = find_node(source_id);
  const auto t = find_node(target_id);
  if (!s || !t) throw InputError("edge endpoint missing: " + source_id + " -> " + target_id);
  if (metaedge.empty()) throw InputError("edge with empty metaedge label");
  GraphEdge edge{*s, metaedge, *t};
  const auto pos = std::lower_bound(edges_.begin(), edges_.end(), edge);
  if (pos != edges_.end() && *pos == edge) return;
  edges_.insert(pos, edge);

  const auto neighbor_less = [this](const Neighbor& a, const Neighbor& b) {
    const auto& ida = nodes_[a.node].id;
    const auto& idb = nodes_[b.node].id;
    if (ida != idb) return ida < idb;
    if (a.step.metaedge != b.step.metaedge) return a.step.metaedge < b.step.metaedge;
    return a.step.forward < b.step.forward;
  };
  const auto insert_sorted = [&](std::size_t at, Neighbor n) {
    auto& adj = adjacency_[at];
    adj.insert(std::upper_bound(adj.begin(), adj.end(), n, neighbor_less), std::move(n));
  };
  insert_sorted(*s, {*t, {metaedge, true}});
  if (*s != *t) insert_sorted(*t, {*s, {metaedge, false}});
}

std::optional<std::size_t> HetioGraph::find_node(const std::string& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> HetioGraph::resolve(NodeKind kind, std::string_view name) const {
  const auto key = normalize_name(name);
  if (const auto it = by_name_.find({kind, key}); it != by_name_.end()) return it->second;
  std::vector<std::string> keys;
  for (auto it = by_name_.lower_bound({kind, std::string()});
       it != by_name_.end() && it->first.first == kind; ++it) {
    keys.push_back(it->first.second);
  }
  const auto best = fuzzy_match(key, keys, kEntityMatchThreshold);
  if (!best) return std::nullopt;
  return by_name_.at({kind, best->key});
}

HetioGraph load_hetionet(std::istream& source, LoadWarnings* warnings, bool strict) {
  const auto table = read_tsv(source);
  const auto cols = require_columns(table, {"source_id", "source_kind", "source_name", "metaedge",
                                            "target_id", "target_kind", "target_name"});
  HetioGraph graph;
  for (const auto& [line, fields] : table.rows) {
    const bool complete = fields.size() == table.header.size();
    std::vector<std::string> v;
    if (complete) {
      for (auto c : cols) v.push_back(trim(fields[c]));
    }
    const bool well_formed = complete && !v[0].empty() && !v[3].empty() && !v[4].empty();
    if (!well_formed) {
      if (strict) throw RowError(line, "malformed edge row");
      if (warnings) warnings->messages.push_back("line " + std::to_string(line) + ": malformed edge row skipped");
      continue;
    }
    for (const auto& [id, kind, name] :
         {std::tuple{v[0], v[1], v[2]}, std::tuple{v[4], v[5], v[6]}}) {
      if (!graph.add_node(id, parse_node_kind(kind), name) && warnings) {
        warnings->messages.push_back("line " + std::to_string(line) + ": conflicting definition for node " +
                                     id + " ignored (first kept)");
      }
    }
    graph.add_edge(v[0], v[3], v[4]);
  }
  return graph;
}

namespace {

// Undirected hop distance to `target`, capped at `limit` (+1 means farther).
std::vector<int> distances_to(const HetioGraph& graph, std::size_t target, int limit) {
  std::vector<int> dist(graph.node_count(), limit + 1);
  std::deque<std::size_t> queue{target};
  dist[target] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    if (dist[u] >= limit) continue;
    for (const auto& n : graph.neighbors(u)) {
      if (dist[n.node] > dist[u] + 1) {
        dist[n.node] = dist[u] + 1;
        queue.push_back(n.node);
      }
    }
  }
  return dist;
}

struct PathSearch {
  const HetioGraph& graph;
  std::size_t target;
  const std::vector<int>& dist;
  int exact_len;
  std::vector<bool> on_path;
  HetioPath current;
  std::vector<HetioPath> found;

  void extend(std::size_t u) {
    const int depth = static_cast<int>(current.steps.size());
    if (u == target) {
      if (depth == exact_len) found.push_back(current);
      return;
    }
    if (depth + dist[u] > exact_len) return;
    for (const auto& n : graph.neighbors(u)) {
      if (on_path[n.node]) continue;
      on_path[n.node] = true;
      current.nodes.push_back(n.node);
      current.steps.push_back(n.step);
      extend(n.node);
      current.steps.pop_back();
      current.nodes.pop_back();
      on_path[n.node] = false;
    }
  }
};

bool path_less(const HetioGraph& graph, const HetioPath& a, const HetioPath& b) {
  if (a.length() != b.length()) return a.length() < b.length();
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const auto& ia = graph.node(a.nodes[i]).id;
    const auto& ib = graph.node(b.nodes[i]).id;
    if (ia != ib) return ia < ib;
  }
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    if (a.steps[i].metaedge != b.steps[i].metaedge) return a.steps[i].metaedge < b.steps[i].metaedge;
    if (a.steps[i].forward != b.steps[i].forward) return a.steps[i].forward < b.steps[i].forward;
  }
  return false;
}

}  // namespace

std::vector<HetioPath> find_paths_between(const HetioGraph& graph, std::size_t from, std::size_t to,
                                          int max_len, int max_paths) {
  if (max_len < 1 || max_paths < 1) throw InputError("max_len and max_paths must be >= 1");
  std::vector<HetioPath> out;
  if (from == to) return out;
  const auto dist = distances_to(graph, to, max_len);
  if (dist[from] > max_len) return out;
  // Paths are ranked by length first, so whole length levels can be
  // enumerated in order and the search stops once the cap is reached.
  for (int len = std::max(1, dist[from]); len <= max_len; ++len) {
    PathSearch search{graph, to, dist, len, std::vector<bool>(graph.node_count(), false), {}, {}};
    search.on_path[from] = true;
    search.current.nodes.push_back(from);
    search.extend(from);
    std::sort(search.found.begin(), search.found.end(),
              [&](const HetioPath& a, const HetioPath& b) { return path_less(graph, a, b); });
    for (auto& p : search.found) out.push_back(std::move(p));
    if (out.size() >= static_cast<std::size_t>(max_paths)) break;
  }
  if (out.size() > static_cast<std::size_t>(max_paths)) out.resize(static_cast<std::size_t>(max_paths));
  return out;
}

std::vector<HetioPath> find_paths(const HetioGraph& graph, std::string_view drug_name,
                                  std::string_view disease_name, int max_len, int max_paths) {
  if (max_len < 1 || max_paths < 1) throw InputError("max_len and max_paths must be >= 1");
  const auto drug = graph.resolve(NodeKind::kCompound, drug_name);
  if (!drug) throw EntityResolutionError(std::string(drug_name), "drug");
  const auto disease = graph.resolve(NodeKind::kDisease, disease_name);
  if (!disease) throw EntityResolutionError(std::string(disease_name), "disease");
  return find_paths_between(graph, *drug, *disease, max_len, max_paths);
}

std::string render_path(const HetioGraph& graph, const HetioPath& path) {
  std::ostringstream out;
  const auto node_text = [&](std::size_t idx) {
    const auto& n = graph.node(idx);
    return n.name + "(" + node_kind_name(n.kind) + ")";
  };
  if (path.nodes.empty()) return {};
  out << node_text(path.nodes[0]);
  for (std::size_t i = 0; i < path.steps.size(); ++i) {
    out << " -[" << path.steps[i].metaedge << (path.steps[i].forward ? ">" : "<") << "]- "
        << node_text(path.nodes[i + 1]);
  }
  return out.str();
}

}  // namespace clinagent
