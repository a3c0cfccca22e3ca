#include "ecoperf/collab_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ecoperf {

std::string_view to_string(GraphKind kind) noexcept {
  switch (kind) {
    case GraphKind::Bipartite: return "bipartite";
    case GraphKind::RepoRelation: return "repo_relation";
    case GraphKind::RepoTopic: return "repo_topic";
    case GraphKind::RepoRelationTopic: return "repo_relation_topic";
  }
  return "repo_relation";
}

GraphKind parse_graph_kind(std::string_view text) {
  for (auto kind : {GraphKind::Bipartite, GraphKind::RepoRelation, GraphKind::RepoTopic, GraphKind::RepoRelationTopic}) {
    if (to_string(kind) == text) return kind;
  }
  throw Error(Errc::InvalidArgument, "unknown graph kind '" + std::string(text) + "'");
}

// CollabGraph -----------------------------------------------------------------

void CollabGraph::check(NodeIndex n) const {
  if (n >= names_.size()) throw Error(Errc::UnknownNode, "node index " + std::to_string(n));
}

std::optional<NodeIndex> CollabGraph::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeIndex CollabGraph::index_of(std::string_view name) const {
  if (auto n = find(name)) return *n;
  throw Error(Errc::UnknownNode, "'" + std::string(name) + "'");
}

std::span<const Neighbor> CollabGraph::neighbors(NodeIndex n) const {
  check(n);
  return {adjacency_.data() + offsets_[n], offsets_[n + 1] - offsets_[n]};
}

double CollabGraph::strength(NodeIndex n) const {
  check(n);
  return strength_[n];
}

double CollabGraph::weight(NodeIndex u, NodeIndex v) const {
  check(v);
  const auto row = neighbors(u);
  auto it = std::lower_bound(row.begin(), row.end(), v, [](const Neighbor& a, NodeIndex b) { return a.node < b; });
  return it != row.end() && it->node == v ? it->weight : 0.0;
}

double CollabGraph::max_weight() const noexcept {
  double m = 0.0;
  for (const auto& e : edges_) m = std::max(m, e.weight);
  return m;
}

// GraphBuilder ----------------------------------------------------------------

NodeIndex GraphBuilder::add_node(const std::string& name, NodeKind kind) {
  if (auto it = index_.find(name); it != index_.end()) {
    if (kinds_[it->second] != kind) {
      throw Error(Errc::KindError, "node '" + name + "' added with two different kinds");
    }
    return it->second;
  }
  if (name.empty() || name.find_first_of("\t\n\r") != std::string::npos) {
    throw Error(Errc::InvalidArgument, "node names must be non-empty and free of tabs/newlines");
  }
  const auto n = static_cast<NodeIndex>(names_.size());
  names_.push_back(name);
  kinds_.push_back(kind);
  index_.emplace(name, n);
  return n;
}

void GraphBuilder::add_weight(NodeIndex u, NodeIndex v, double w) {
  if (u >= names_.size() || v >= names_.size()) throw Error(Errc::UnknownNode, "edge endpoint out of range");
  if (u == v) throw Error(Errc::InvalidArgument, "self-loop on '" + names_[u] + "'");
  if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::InvalidArgument, "edge weight must be finite and >= 0");
  if (kind_ == GraphKind::Bipartite && (kinds_[u] == kinds_[v] || kinds_[u] == NodeKind::Implicit ||
                                        kinds_[v] == NodeKind::Implicit)) {
    throw Error(Errc::KindError, "bipartite edges must join a developer and a repo");
  }
  const std::uint64_t key = (std::uint64_t{std::min(u, v)} << 32) | std::max(u, v);
  auto [it, inserted] = edge_slot_.try_emplace(key, edges_.size());
  if (inserted) {
    edges_.push_back({u, v, w});
  } else {
    edges_[it->second].weight += w;
  }
}

void GraphBuilder::add_weight(const std::string& u, const std::string& v, double w, NodeKind kind) {
  if (kind_ == GraphKind::Bipartite) {
    add_weight(add_node(u, NodeKind::Dev), add_node(v, NodeKind::Repo), w);
  } else {
    add_weight(add_node(u, kind), add_node(v, kind), w);
  }
}

CollabGraph GraphBuilder::build() && {
  CollabGraph g;
  g.kind_ = kind_;
  g.names_ = std::move(names_);
  g.kinds_ = std::move(kinds_);
  g.index_ = std::move(index_);
  std::copy_if(edges_.begin(), edges_.end(), std::back_inserter(g.edges_), [](const Edge& e) { return e.weight > 0.0; });

  const std::size_t n = g.names_.size();
  std::vector<std::size_t> degree(n, 0);
  for (const auto& e : g.edges_) {
    ++degree[e.u];
    ++degree[e.v];
  }
  g.offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + degree[i];
  g.adjacency_.resize(g.offsets_[n]);
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& e : g.edges_) {
    g.adjacency_[fill[e.u]++] = {e.v, e.weight};
    g.adjacency_[fill[e.v]++] = {e.u, e.weight};
  }
  g.strength_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto first = g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]);
    auto last = g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]);
    std::sort(first, last, [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    for (auto it = first; it != last; ++it) g.strength_[i] += it->weight;
  }
  return g;
}

// Builders ----------------------------------------------------------------------

CollabGraph build_bipartite(std::span<const Event> events, const EventWeightConfig& weights) {
  GraphBuilder b(GraphKind::Bipartite);
  for (const auto& e : events) {
    const double w = weights.weight_of(e);
    if (w <= 0.0) continue;
    const auto dev = b.add_node(e.actor_login, NodeKind::Dev);
    const auto repo = b.add_node(e.repo_name, NodeKind::Repo);
    b.add_weight(dev, repo, w);
  }
  return std::move(b).build();
}

CollabGraph project_repo_relation(const CollabGraph& g, ProjectionRule rule) {
  if (g.kind() != GraphKind::Bipartite) {
    throw Error(Errc::KindError, "projection needs a bipartite graph, got " + std::string(to_string(g.kind())));
  }
  GraphBuilder b(GraphKind::RepoRelation);
  std::vector<NodeIndex> remap(g.node_count(), 0);
  for (NodeIndex n = 0; n < g.node_count(); ++n) {
    if (g.node_kind(n) == NodeKind::Repo) remap[n] = b.add_node(g.name(n), NodeKind::Repo);
  }
  for (NodeIndex d = 0; d < g.node_count(); ++d) {
    if (g.node_kind(d) != NodeKind::Dev) continue;
    const auto repos = g.neighbors(d);
    for (std::size_t i = 0; i < repos.size(); ++i) {
      for (std::size_t j = i + 1; j < repos.size(); ++j) {
        const double w = rule == ProjectionRule::MinShared ? std::min(repos[i].weight, repos[j].weight)
                                                           : repos[i].weight * repos[j].weight;
        b.add_weight(remap[repos[i].node], remap[repos[j].node], w);
      }
    }
  }
  return std::move(b).build();
}

CollabGraph build_repo_topic(const RepoTopics& topics) {
  GraphBuilder b(GraphKind::RepoTopic);
  std::vector<std::pair<NodeIndex, const std::set<std::string>*>> nodes;
  for (const auto& [repo, tags] : topics) nodes.emplace_back(b.add_node(repo, NodeKind::Repo), &tags);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const auto& a = *nodes[i].second;
      const auto& c = *nodes[j].second;
      std::size_t shared = 0;
      auto ia = a.begin();
      auto ic = c.begin();
      while (ia != a.end() && ic != c.end()) {
        if (*ia < *ic) {
          ++ia;
        } else if (*ic < *ia) {
          ++ic;
        } else {
          ++shared, ++ia, ++ic;
        }
      }
      if (shared > 0) b.add_weight(nodes[i].first, nodes[j].first, static_cast<double>(shared));
    }
  }
  return std::move(b).build();
}

CollabGraph merge_relation_topic(const CollabGraph& rel, const CollabGraph& top, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in [0, 1]");
  if (rel.edge_count() == 0 && top.edge_count() == 0) throw Error(Errc::EmptyGraph, "both inputs have no edges");

  GraphBuilder b(GraphKind::RepoRelationTopic);
  for (NodeIndex n = 0; n < rel.node_count(); ++n) b.add_node(rel.name(n), NodeKind::Repo);
  for (NodeIndex n = 0; n < top.node_count(); ++n) b.add_node(top.name(n), NodeKind::Repo);

  auto blend = [&b](const CollabGraph& g, double scale) {
    const double max = g.max_weight();
    if (max <= 0.0 || scale == 0.0) return;
    for (const auto& e : g.edges()) b.add_weight(g.name(e.u), g.name(e.v), scale * (e.weight / max), NodeKind::Repo);
  };
  blend(rel, alpha);
  blend(top, 1.0 - alpha);
  return std::move(b).build();
}

double node_strength(const CollabGraph& g, NodeIndex n) { return g.strength(n); }

std::vector<NodeIndex> common_neighbors(const CollabGraph& g, NodeIndex u, NodeIndex v) {
  const auto a = g.neighbors(u);
  const auto b = g.neighbors(v);
  std::vector<NodeIndex> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].node < b[j].node) {
      ++i;
    } else if (b[j].node < a[i].node) {
      ++j;
    } else {
      if (a[i].node != u && a[i].node != v) out.push_back(a[i].node);
      ++i, ++j;
    }
  }
  return out;
}

// Serialization -----------------------------------------------------------------

void write_edge_list(const CollabGraph& g, std::ostream& out) {
  out << "#kind=" << to_string(g.kind()) << '\n';
  for (const auto& e : g.edges()) {
    NodeIndex first = e.u, second = e.v;
    if (g.kind() == GraphKind::Bipartite && g.node_kind(first) != NodeKind::Dev) std::swap(first, second);
    out << g.name(first) << '\t' << g.name(second) << '\t' << format_double(e.weight) << '\n';
  }
}

CollabGraph read_edge_list(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("#kind=", 0) != 0) {
    throw Error(Errc::ParseError, "edge list must start with '#kind=<kind>'");
  }
  const GraphKind kind = parse_graph_kind(trim(std::string_view(line).substr(6)));
  GraphBuilder b(kind);
  const NodeKind left = kind == GraphKind::Bipartite ? NodeKind::Dev : NodeKind::Repo;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": expected 'u\\tv\\tweight'");
    }
    double w;
    try {
      w = parse_double(fields[2]);
    } catch (const Error&) {
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": bad weight '" + fields[2] + "'");
    }
    if (!(w > 0.0)) throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": weight must be > 0");
    b.add_weight(b.add_node(fields[0], left), b.add_node(fields[1], NodeKind::Repo), w);
  }
  return std::move(b).build();
}

CollabGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  return read_edge_list(in);
}

void save_edge_list(const CollabGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  write_edge_list(g, out);
}

RepoTopics read_repo_topics(std::istream& in) {
  RepoTopics topics;
  std::string line;
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto comma = text.find(',');
    const std::string repo(trim(text.substr(0, comma)));
    if (repo == "repo_name") continue;  // header
    auto& tags = topics[repo];
    if (comma == std::string_view::npos) continue;
    for (const auto& raw : split(text.substr(comma + 1), ';')) {
      auto tag = to_lower(trim(raw));
      if (!tag.empty()) tags.insert(std::move(tag));
    }
  }
  std::erase_if(topics, [](const auto& entry) { return entry.second.empty(); });
  return topics;
}

}  // namespace ecoperf
