#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ecoperf/bench.hpp"
#include "ecoperf/event_store.hpp"
#include "ecoperf/indices.hpp"
#include "ecoperf/weights.hpp"

// Read queries shared by the CLI and the HTTP service, so both emit the same bytes.

namespace ecoperf {

struct IndexQuery {
  IndexName index = IndexName::OpenRank;
  std::optional<Month> month;  // latest stored month when absent
  EntityFilter entities = EntityFilter::Repos;
  double scale = 1.0;
  unsigned threads = 1;
  std::optional<std::size_t> top;
};

/// Month the query resolves to. Throws UnknownId when the store lacks it or holds nothing.
Month resolve_month(const EventStore& store, const std::optional<Month>& month);

/// Index values for one month, descending. Graph indices use the developer-repo graph of that month.
std::vector<IndexResult> query_index(const EventStore& store, const EventWeightConfig& weights, const IndexQuery& q);
Leaderboard query_leaderboard(const EventStore& store, const EventWeightConfig& weights, const IndexQuery& q);

std::string index_query_json(const EventStore& store, const EventWeightConfig& weights, const IndexQuery& q);
std::string leaderboard_query_json(const EventStore& store, const EventWeightConfig& weights, const IndexQuery& q);
std::string benchmarks_json(const Registry& registry);
/// Throws UnknownId.
std::string runs_json(const Registry& registry, const std::string& id);

}  // namespace ecoperf
