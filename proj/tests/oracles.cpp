#include "oracles.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>

namespace oracle {

using namespace clinagent;

std::filesystem::path fixtures() { return CLINAGENT_FIXTURES_DIR; }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double pairwise_auc(const std::vector<ScoredExample>& xs) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const auto& p : xs) {
    if (p.label != 1) continue;
    for (const auto& n : xs) {
      if (n.label != 0) continue;
      pairs += 1.0;
      if (p.score > n.score) wins += 1.0;
      else if (p.score == n.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

double direct_average_precision(const std::vector<ScoredExample>& xs) {
  const auto ranks_at_or_above = [](const ScoredExample& a, const ScoredExample& b) {
    // true when a is ranked at or above b
    if (a.score != b.score) return a.score > b.score;
    return a.trial_id <= b.trial_id;
  };
  double sum = 0.0;
  int positives = 0;
  for (const auto& x : xs) {
    if (x.label != 1) continue;
    ++positives;
    int above = 0;
    int hits = 0;
    for (const auto& y : xs) {
      if (!ranks_at_or_above(y, x)) continue;
      ++above;
      hits += y.label;
    }
    sum += static_cast<double>(hits) / above;
  }
  return sum / positives;
}

PlainPath to_plain(const HetioGraph& g, const HetioPath& p) {
  std::vector<std::string> ids;
  for (auto n : p.nodes) ids.push_back(g.node(n).id);
  std::vector<std::pair<std::string, bool>> steps;
  for (const auto& s : p.steps) steps.emplace_back(s.metaedge, s.forward);
  return {p.length(), ids, steps};
}

std::vector<PlainPath> dfs_paths(const HetioGraph&,
                                 const std::vector<std::tuple<std::string, std::string, std::string>>& edges,
                                 const std::string& from_id, const std::string& to_id, int max_len) {
  // Deduplicate edges the way a set of triples would.
  const std::set<std::tuple<std::string, std::string, std::string>> unique(edges.begin(), edges.end());
  std::set<PlainPath> found;
  std::vector<std::string> ids{from_id};
  std::vector<std::pair<std::string, bool>> steps;
  std::function<void(const std::string&)> walk = [&](const std::string& at) {
    if (at == to_id) {
      found.insert({steps.size(), ids, steps});
      return;
    }
    if (static_cast<int>(steps.size()) == max_len) return;
    for (const auto& [s, m, t] : unique) {
      for (int dir = 0; dir < 2; ++dir) {
        const std::string& a = dir == 0 ? s : t;
        const std::string& b = dir == 0 ? t : s;
        if (a != at) continue;
        if (std::find(ids.begin(), ids.end(), b) != ids.end()) continue;
        ids.push_back(b);
        steps.emplace_back(m, dir == 0);
        walk(b);
        ids.pop_back();
        steps.pop_back();
      }
    }
  };
  walk(from_id);
  return {found.begin(), found.end()};
}

RandomGraph random_graph(std::mt19937& rng, int max_nodes) {
  RandomGraph r;
  std::uniform_int_distribution<int> count(2, max_nodes);
  const int n = count(rng);
  const std::vector<NodeKind> kinds{NodeKind::kCompound, NodeKind::kDisease, NodeKind::kGene,
                                    NodeKind::kAnatomy};
  for (int i = 0; i < n; ++i) {
    // Node 0 is the drug and node 1 the disease; ids are shuffled so sort
    // order does not follow insertion order.
    const NodeKind kind = i == 0 ? NodeKind::kCompound
                          : i == 1 ? NodeKind::kDisease
                                   : kinds[std::uniform_int_distribution<std::size_t>(0, 3)(rng)];
    const std::string id = "n" + std::to_string(std::uniform_int_distribution<int>(0, 999)(rng)) + "_" +
                           std::to_string(i);
    r.graph.add_node(id, kind, i == 0 ? "drug zero" : i == 1 ? "disease one" : "entity " + id);
    r.ids.push_back(id);
  }
  const std::vector<std::string> metaedges{"CtD", "CbG", "DaG", "GiG", "CrC"};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double density = 0.1 + 0.35 * unit(rng);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || unit(rng) >= density) continue;
      const auto& m = metaedges[std::uniform_int_distribution<std::size_t>(0, metaedges.size() - 1)(rng)];
      r.edges.emplace_back(r.ids[i], m, r.ids[j]);
      r.graph.add_edge(r.ids[i], m, r.ids[j]);
      if (unit(rng) < 0.1) {  // occasional exact duplicate
        r.edges.emplace_back(r.ids[i], m, r.ids[j]);
        r.graph.add_edge(r.ids[i], m, r.ids[j]);
      }
    }
  }
  return r;
}

std::optional<double> recount_failure_rate(const std::vector<TrialRecord>& records,
                                           const std::string& name, bool drug) {
  long total = 0;
  long success = 0;
  for (const auto& r : records) {
    const auto& names = drug ? r.drugs : r.diseases;
    if (std::find(names.begin(), names.end(), name) == names.end()) continue;
    ++total;
    success += *r.label;
  }
  if (total == 0) return std::nullopt;
  return 1.0 - static_cast<double>(success) / static_cast<double>(total);
}

std::vector<double> numeric_gradient(const LogisticObjective& obj, std::vector<double> w, double b,
                                     double* db, double h) {
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double keep = w[i];
    w[i] = keep + h;
    const double up = obj.loss(w, b);
    w[i] = keep - h;
    const double down = obj.loss(w, b);
    w[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  *db = (obj.loss(w, b + h) - obj.loss(w, b - h)) / (2 * h);
  return g;
}

KnowledgeBundle case_study_bundle() {
  const auto dir = fixtures() / "case_study";
  KnowledgeBundle bundle;
  std::ifstream drugs(dir / "drugbank.tsv");
  bundle.drugs = load_drugbank(drugs);
  std::ifstream graph(dir / "hetionet.tsv");
  bundle.graph = load_hetionet(graph);
  std::ifstream hist(dir / "history.csv");
  const auto history = parse_trial_dataset(hist).records;
  bundle.drug_outcomes = build_outcome_table(history, EntityKind::kDrug);
  bundle.disease_outcomes = build_outcome_table(history, EntityKind::kDisease);
  bundle.enrollment = std::make_shared<ReferenceEnrollmentPredictor>(
      EnrollmentModel::load(dir / "enrollment_model.json"));
  bundle.prompts = PromptSet::load(PromptSet::default_dir());
  return bundle;
}

TrialRecord case_study_trial() {
  return trial_from_json(nlohmann::json::parse(read_text(fixtures() / "case_study" / "trial.json")));
}

std::vector<std::string> case_study_flags() {
  const auto dir = fixtures() / "case_study";
  return {"--history",  (dir / "history.csv").string(),  "--drugbank",
          (dir / "drugbank.tsv").string(), "--hetionet", (dir / "hetionet.tsv").string(),
          "--enrollment-model", (dir / "enrollment_model.json").string()};
}

}  // namespace oracle
