#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ecoperf/common.hpp"
#include "ecoperf/event_store.hpp"
#include "ecoperf/weights.hpp"

namespace ecoperf {

enum class GraphKind { Bipartite, RepoRelation, RepoTopic, RepoRelationTopic };
enum class NodeKind { Dev, Repo, Implicit };

std::string_view to_string(GraphKind kind) noexcept;
GraphKind parse_graph_kind(std::string_view text);

using NodeIndex = std::uint32_t;

struct Edge {
  NodeIndex u;
  NodeIndex v;
  double weight;
};

struct Neighbor {
  NodeIndex node;
  double weight;
};

/// Weighted undirected graph with dense node indices assigned in first-seen order.
/// Immutable once built; safe to share between readers.
class CollabGraph {
 public:
  CollabGraph() = default;

  GraphKind kind() const noexcept { return kind_; }
  std::size_t node_count() const noexcept { return names_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  const std::string& name(NodeIndex n) const { return names_.at(n); }
  NodeKind node_kind(NodeIndex n) const { return kinds_.at(n); }
  std::optional<NodeIndex> find(std::string_view name) const;
  /// Throws UnknownNode.
  NodeIndex index_of(std::string_view name) const;

  /// Neighbors sorted by node index.
  std::span<const Neighbor> neighbors(NodeIndex n) const;
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::size_t degree(NodeIndex n) const { return neighbors(n).size(); }
  double strength(NodeIndex n) const;
  /// Weight of the edge {u, v}; 0 when absent.
  double weight(NodeIndex u, NodeIndex v) const;
  bool has_edge(NodeIndex u, NodeIndex v) const { return weight(u, v) > 0.0; }
  double max_weight() const noexcept;

 private:
  friend class GraphBuilder;

  void check(NodeIndex n) const;

  GraphKind kind_ = GraphKind::RepoRelation;
  std::vector<std::string> names_;
  std::vector<NodeKind> kinds_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;  // CSR row starts, size node_count + 1
  std::vector<Neighbor> adjacency_;
  std::vector<double> strength_;
};

/// Accumulates nodes and edge weights, then freezes them into a CollabGraph.
class GraphBuilder {
 public:
  explicit GraphBuilder(GraphKind kind) : kind_(kind) {}

  /// Returns the existing index when the name was seen before.
  NodeIndex add_node(const std::string& name, NodeKind kind = NodeKind::Implicit);
  /// Adds `w` to the weight of {u, v}. Self-loops and negative weights are rejected.
  void add_weight(NodeIndex u, NodeIndex v, double w);
  /// By name; in a bipartite builder `u` is the developer and `v` the repo, and `kind` is ignored.
  void add_weight(const std::string& u, const std::string& v, double w, NodeKind kind = NodeKind::Implicit);

  /// Edges whose accumulated weight is not positive are dropped.
  CollabGraph build() &&;

 private:
  GraphKind kind_;
  std::vector<std::string> names_;
  std::vector<NodeKind> kinds_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, std::size_t> edge_slot_;
};

/// Repo name -> set of lowercase topic tags.
using RepoTopics = std::map<std::string, std::set<std::string>>;

enum class ProjectionRule { MinShared, Product };

/// Developer-repo graph; weight(dev, repo) sums the configured weight of each of the pair's events.
CollabGraph build_bipartite(std::span<const Event> events, const EventWeightConfig& weights);

/// Repo-repo graph linking repos that share a developer; weight sums min(w(d,u), w(d,v)) over shared devs.
CollabGraph project_repo_relation(const CollabGraph& bipartite, ProjectionRule rule = ProjectionRule::MinShared);

/// Repo-repo graph weighted by the number of shared topics.
CollabGraph build_repo_topic(const RepoTopics& topics);

/// Convex blend of the max-normalized relation and topic graphs.
CollabGraph merge_relation_topic(const CollabGraph& relation, const CollabGraph& topic, double alpha = 0.5);

double node_strength(const CollabGraph& g, NodeIndex n);
/// Common neighbors of u and v, excluding u and v, in ascending index order.
std::vector<NodeIndex> common_neighbors(const CollabGraph& g, NodeIndex u, NodeIndex v);

// Serialization ---------------------------------------------------------------

/// `#kind=<kind>` header, then one `u \t v \t weight` line per edge.
/// Bipartite files always list the developer first.
void write_edge_list(const CollabGraph& g, std::ostream& out);
CollabGraph read_edge_list(std::istream& in);
CollabGraph load_edge_list(const std::string& path);
void save_edge_list(const CollabGraph& g, const std::string& path);

/// CSV `repo_name,topic1;topic2;...`; tags are trimmed, lowercased and deduplicated.
RepoTopics read_repo_topics(std::istream& in);

}  // namespace ecoperf
