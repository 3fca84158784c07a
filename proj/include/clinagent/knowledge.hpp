#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clinagent/error.hpp"

namespace clinagent {

/// Fuzzy threshold for resolving drug and graph entity names.
inline constexpr double kEntityMatchThreshold = 0.6;

enum class MatchKind { kExact, kFuzzy };

std::string match_kind_name(MatchKind kind);

struct DrugEntry {
  std::string name;
  std::string description;
  std::string indication;
  std::string mechanism;
  std::string smiles;
};

struct DrugMatch {
  DrugEntry entry;
  MatchKind kind;
  double similarity;
};

/// Drug descriptions keyed by normalized name.
class DrugStore {
 public:
  /// Inserts unless the normalized name is already present; returns whether
  /// the entry was added.
  bool insert(DrugEntry entry);

  std::optional<DrugMatch> lookup(std::string_view name,
                                  double threshold = kEntityMatchThreshold) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, DrugEntry> entries_;
};

struct LoadWarnings {
  std::vector<std::string> messages;
};

/// TSV with header `name\tdescription\tindication\tmechanism\tsmiles`.
DrugStore load_drugbank(std::istream& source, LoadWarnings* warnings = nullptr);

enum class NodeKind {
  kCompound,
  kDisease,
  kGene,
  kAnatomy,
  kPathway,
  kSideEffect,
  kSymptom,
  kPharmacologicClass,
  kOther
};

NodeKind parse_node_kind(std::string_view text);
std::string node_kind_name(NodeKind kind);

struct GraphNode {
  std::string id;
  NodeKind kind;
  std::string name;
};

struct GraphEdge {
  std::size_t source;  // node index
  std::string metaedge;
  std::size_t target;

  auto operator<=>(const GraphEdge&) const = default;
};

/// One step along a path. `forward` is true when the underlying edge points
/// from the previous node to the next one.
struct PathStep {
  std::string metaedge;
  bool forward;

  bool operator==(const PathStep&) const = default;
};

struct HetioPath {
  std::vector<std::size_t> nodes;  // node indices into the graph
  std::vector<PathStep> steps;

  std::size_t length() const { return steps.size(); }
  bool operator==(const HetioPath&) const = default;
};

class EntityResolutionError : public Error {
 public:
  EntityResolutionError(std::string entity, std::string kind)
      : Error("cannot resolve " + kind + " '" + entity + "' in the knowledge graph"),
        entity_(std::move(entity)) {}
  const std::string& entity() const noexcept { return entity_; }

 private:
  std::string entity_;
};

/// Typed biomedical graph. Nodes are deduplicated by id; edges have set
/// semantics. Traversal ignores direction but remembers it.
class HetioGraph {
 public:
  /// Adds a node; on an id conflict with a different name or kind, keeps the
  /// first and returns false.
  bool add_node(const std::string& id, NodeKind kind, const std::string& name);
  /// Adds an edge between existing node ids; duplicate edges are ignored.
  void add_edge(const std::string& source_id, const std::string& metaedge,
                const std::string& target_id);

  const GraphNode& node(std::size_t index) const { return nodes_.at(index); }
  std::optional<std::size_t> find_node(const std::string& id) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  /// Name-index lookup with fuzzy fallback (threshold kEntityMatchThreshold).
  std::optional<std::size_t> resolve(NodeKind kind, std::string_view name) const;

  struct Neighbor {
    std::size_t node;
    PathStep step;
  };
  /// Sorted, deduplicated adjacency in both directions.
  const std::vector<Neighbor>& neighbors(std::size_t node) const { return adjacency_.at(node); }

 private:
  std::vector<GraphNode> nodes_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::pair<NodeKind, std::string>, std::size_t> by_name_;
  std::vector<GraphEdge> edges_;  // kept sorted
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// TSV edge list `source_id\tsource_kind\tsource_name\tmetaedge\ttarget_id\t
/// target_kind\ttarget_name` with a header row.
HetioGraph load_hetionet(std::istream& source, LoadWarnings* warnings = nullptr,
                         bool strict = true);

inline constexpr int kDefaultMaxPathLength = 4;
inline constexpr int kDefaultMaxPaths = 25;

/// Simple drug->disease paths of length <= max_len, sorted by length then by
/// node-id sequence, truncated to max_paths.
std::vector<HetioPath> find_paths(const HetioGraph& graph, std::string_view drug_name,
                                  std::string_view disease_name,
                                  int max_len = kDefaultMaxPathLength,
                                  int max_paths = kDefaultMaxPaths);

/// Same enumeration between two resolved node indices.
std::vector<HetioPath> find_paths_between(const HetioGraph& graph, std::size_t from,
                                          std::size_t to, int max_len, int max_paths);

/// `Name(Kind) -[metaedge>]- Name(Kind) ...`; `<` marks a reversed edge.
std::string render_path(const HetioGraph& graph, const HetioPath& path);

}  // namespace clinagent
