#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecoperf/collab_graph.hpp"
#include "ecoperf/common.hpp"
#include "ecoperf/event_store.hpp"
#include "ecoperf/weights.hpp"

namespace ecoperf {

enum class IndexName { OpenActivity, OpenRank, DegreeCentrality, PageRank };

std::string_view to_string(IndexName index) noexcept;
/// Accepts canonical names and the CLI spellings "activity", "openrank", "degree", "pagerank".
IndexName parse_index_name(std::string_view text);

struct IndexResult {
  std::string entity;
  double value = 0.0;
  std::string month;
  IndexName index = IndexName::OpenActivity;

  bool operator==(const IndexResult&) const = default;
};

/// OpenActivity per repo: sum over developers of sqrt(weighted event total on the repo).
/// Sorted by descending value, then repo name.
std::vector<IndexResult> compute_activity(std::span<const Event> events, Month month, const EventWeightConfig& weights);
std::vector<IndexResult> compute_activity(const EventStore& store, Month month, const EventWeightConfig& weights);

struct RankOptions {
  double damping = 0.85;
  double tol = 1e-9;
  int max_iter = 200;
  unsigned threads = 1;
};

/// Scores indexed by node. Isolated nodes take no part in the iteration and carry 0.
struct NodeScores {
  VectorXd values;
  std::vector<bool> included;
  int iterations = 0;
  bool converged = true;

  double sum() const { return values.sum(); }
};

/// Weighted PageRank over the developer-repo graph: r_i = (1-d)/N + d * sum_j (w_ij / s_j) r_j.
/// On NoConvergence the last iterate is returned with converged = false.
NodeScores compute_openrank(const CollabGraph& g, const RankOptions& options = {});
/// Same iteration with every edge weight set to 1.
NodeScores compute_pagerank(const CollabGraph& g, const RankOptions& options = {});
/// deg(n) / (N - 1); defined as 0 for a single-node graph.
NodeScores compute_degree_centrality(const CollabGraph& g);

enum class EntityFilter { Repos, Devs, All };

/// Converts node scores to IndexResults (descending value, then entity) with an optional display scale.
std::vector<IndexResult> to_index_results(const CollabGraph& g, const NodeScores& scores, IndexName index,
                                          Month month, EntityFilter filter = EntityFilter::Repos, double scale = 1.0);

std::string index_results_json(std::span<const IndexResult> results);
/// CSV `entity,month,index,value`.
std::string index_results_csv(std::span<const IndexResult> results);

}  // namespace ecoperf
