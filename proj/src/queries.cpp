#include "ecoperf/queries.hpp"

#include <json.hpp>

#include "ecoperf/collab_graph.hpp"

namespace ecoperf {

Month resolve_month(const EventStore& store, const std::optional<Month>& month) {
  if (month) {
    if (!store.has_month(*month)) throw Error(Errc::UnknownId, "store has no partition for " + month->str());
    return *month;
  }
  auto latest = store.latest_month();
  if (!latest) throw Error(Errc::UnknownId, "store is empty");
  return *latest;
}

std::vector<IndexResult> query_index(const EventStore& store, const EventWeightConfig& weights, const IndexQuery& q) {
  const Month month = resolve_month(store, q.month);
  std::vector<IndexResult> results;
  if (q.index == IndexName::OpenActivity) {
    results = compute_activity(store, month, weights);
    for (auto& r : results) r.value *= q.scale;
  } else {
    const auto events = store.partition(month);
    // PageRank and degree ignore weights, but the graph still drops zero-weight events
    // so that every index sees the same node set.
    const auto graph = build_bipartite(events, weights);
    RankOptions options;
    options.threads = q.threads;
    NodeScores scores;
    switch (q.index) {
      case IndexName::OpenRank: scores = compute_openrank(graph, options); break;
      case IndexName::PageRank: scores = compute_pagerank(graph, options); break;
      default: scores = compute_degree_centrality(graph); break;
    }
    results = to_index_results(graph, scores, q.index, month, q.entities, q.scale);
  }
  if (q.top && results.size() > *q.top) results.resize(*q.top);
  return results;
}

Leaderboard query_leaderboard(const EventStore& store, const EventWeightConfig& weights, const IndexQuery& q) {
  IndexQuery all = q;
  all.top.reset();
  const auto results = query_index(store, weights, all);
  std::vector<std::pair<std::string, double>> values;
  values.reserve(results.size());
  for (const auto& r : results) values.emplace_back(r.entity, r.value);
  auto board = build_leaderboard(values, std::string(to_string(q.index)), resolve_month(store, q.month).str());
  return q.top ? top_n(std::move(board), *q.top) : board;
}

std::string index_query_json(const EventStore& store, const EventWeightConfig& weights, const IndexQuery& q) {
  return index_results_json(query_index(store, weights, q));
}

std::string leaderboard_query_json(const EventStore& store, const EventWeightConfig& weights, const IndexQuery& q) {
  return export_leaderboard(query_leaderboard(store, weights, q), ExportFormat::Json);
}

std::string benchmarks_json(const Registry& registry) {
  const auto ids = registry.ids();
  return catalog_json(ids);
}

std::string runs_json(const Registry& registry, const std::string& id) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto& run : registry.runs(id)) arr.push_back(std::move(run));
  return arr.dump(2) + "\n";
}

}  // namespace ecoperf
