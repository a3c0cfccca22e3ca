#include "ecoperf/indices.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "ecoperf/detail/power_iteration.hpp"

namespace ecoperf {

using nlohmann::json;

// EventWeightConfig -------------------------------------------------------------

double EventWeightConfig::weight_of(std::string_view type_key) const {
  auto it = weights.find(std::string(type_key));
  return it == weights.end() ? 0.0 : it->second;
}

double EventWeightConfig::weight_of(const Event& event) const { return weight_of(event.type_key()); }

EventWeightConfig EventWeightConfig::defaults() {
  return {"default",
          {{"IssueComment", 1.0},
           {"IssueOpen", 2.0},
           {"PROpen", 3.0},
           {"PRReviewComment", 4.0},
           {"PRMerge", 2.0},
           {"Push", 0.0},
           {"Star", 0.0},
           {"Fork", 0.0}}};
}

void EventWeightConfig::validate() const {
  for (const auto& [type, w] : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(Errc::InvalidArgument, "weight for '" + type + "' must be finite and >= 0");
    }
  }
}

std::string EventWeightConfig::to_json() const {
  return json{{"name", name}, {"weights", weights}}.dump(2) + "\n";
}

EventWeightConfig EventWeightConfig::from_json(std::string_view text) {
  EventWeightConfig cfg;
  try {
    const auto obj = json::parse(text);
    const bool wrapped = obj.contains("weights") && obj["weights"].is_object();
    cfg.name = wrapped ? obj.value("name", "custom") : "custom";
    for (const auto& [type, w] : (wrapped ? obj["weights"] : obj).items()) {
      if (!w.is_number()) throw Error(Errc::InvalidArgument, "weight for '" + type + "' is not a number");
      cfg.weights[type] = w.get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad weight config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

EventWeightConfig EventWeightConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

// Index names -------------------------------------------------------------------

std::string_view to_string(IndexName index) noexcept {
  switch (index) {
    case IndexName::OpenActivity: return "OpenActivity";
    case IndexName::OpenRank: return "OpenRank";
    case IndexName::DegreeCentrality: return "DegreeCentrality";
    case IndexName::PageRank: return "PageRank";
  }
  return "OpenActivity";
}

IndexName parse_index_name(std::string_view text) {
  const auto t = to_lower(text);
  if (t == "activity" || t == "openactivity") return IndexName::OpenActivity;
  if (t == "openrank") return IndexName::OpenRank;
  if (t == "degree" || t == "degreecentrality") return IndexName::DegreeCentrality;
  if (t == "pagerank") return IndexName::PageRank;
  throw Error(Errc::UnknownId, "unknown index '" + std::string(text) + "'");
}

namespace {

void sort_results(std::vector<IndexResult>& results) {
  std::sort(results.begin(), results.end(), [](const IndexResult& a, const IndexResult& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.entity < b.entity;
  });
}

std::vector<NodeIndex> non_isolated(const CollabGraph& g) {
  std::vector<NodeIndex> active;
  for (NodeIndex n = 0; n < g.node_count(); ++n) {
    if (g.degree(n) > 0) active.push_back(n);
  }
  return active;
}

template <typename WeightFn>
NodeScores rank_scores(const CollabGraph& g, const RankOptions& opt, WeightFn weight) {
  if (g.edge_count() == 0) throw Error(Errc::EmptyGraph, "ranking needs at least one edge");
  if (!(opt.damping > 0.0 && opt.damping < 1.0)) throw Error(Errc::InvalidArgument, "damping must lie in (0, 1)");
  const auto active = non_isolated(g);
  auto it = detail::power_iteration<double>(g, active, weight, opt.damping, opt.tol, opt.max_iter, opt.threads);
  NodeScores scores;
  scores.values = std::move(it.scores);
  scores.included.assign(g.node_count(), false);
  for (NodeIndex n : active) scores.included[n] = true;
  scores.iterations = it.iterations;
  scores.converged = it.converged;
  return scores;
}

}  // namespace

std::vector<IndexResult> compute_activity(std::span<const Event> events, Month month,
                                          const EventWeightConfig& weights) {
  // repo -> actor -> weighted event total
  std::map<std::string, std::map<std::int64_t, double>> totals;
  for (const auto& e : events) {
    if (e.month() != month) continue;
    totals[e.repo_name][e.actor_id] += weights.weight_of(e);
  }
  std::vector<IndexResult> out;
  const std::string label = month.str();
  for (const auto& [repo, per_dev] : totals) {
    double activity = 0.0;
    for (const auto& [actor, total] : per_dev) activity += std::sqrt(total);
    out.push_back({repo, activity, label, IndexName::OpenActivity});
  }
  sort_results(out);
  return out;
}

std::vector<IndexResult> compute_activity(const EventStore& store, Month month, const EventWeightConfig& weights) {
  weights.validate();
  const auto events = store.partition(month);
  return compute_activity(std::span<const Event>(events), month, weights);
}

NodeScores compute_openrank(const CollabGraph& g, const RankOptions& options) {
  return rank_scores(g, options, [](const Neighbor& nb) { return nb.weight; });
}

NodeScores compute_pagerank(const CollabGraph& g, const RankOptions& options) {
  return rank_scores(g, options, [](const Neighbor&) { return 1.0; });
}

NodeScores compute_degree_centrality(const CollabGraph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) throw Error(Errc::EmptyGraph, "degree centrality needs at least one node");
  NodeScores scores;
  scores.values = VectorXd::Zero(static_cast<Eigen::Index>(n));
  scores.included.assign(n, true);
  if (n > 1) {
    for (NodeIndex i = 0; i < n; ++i) {
      scores.values[i] = static_cast<double>(g.degree(i)) / static_cast<double>(n - 1);
    }
  }
  return scores;
}

std::vector<IndexResult> to_index_results(const CollabGraph& g, const NodeScores& scores, IndexName index,
                                          Month month, EntityFilter filter, double scale) {
  std::vector<IndexResult> out;
  const std::string label = month.str();
  for (NodeIndex n = 0; n < g.node_count(); ++n) {
    if (!scores.included[n]) continue;
    const auto kind = g.node_kind(n);
    if (filter == EntityFilter::Repos && kind == NodeKind::Dev) continue;
    if (filter == EntityFilter::Devs && kind != NodeKind::Dev) continue;
    out.push_back({g.name(n), scores.values[n] * scale, label, index});
  }
  sort_results(out);
  return out;
}

std::string index_results_json(std::span<const IndexResult> results) {
  json arr = json::array();
  for (const auto& r : results) {
    arr.push_back({{"entity", r.entity}, {"value", r.value}, {"month", r.month}, {"index_name", to_string(r.index)}});
  }
  return arr.dump(2) + "\n";
}

std::string index_results_csv(std::span<const IndexResult> results) {
  std::string out = "entity,month,index,value\n";
  for (const auto& r : results) {
    out += r.entity + "," + r.month + "," + std::string(to_string(r.index)) + "," + format_double(r.value) + "\n";
  }
  return out;
}

}  // namespace ecoperf
