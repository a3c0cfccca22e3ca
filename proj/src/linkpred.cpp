#include "ecoperf/linkpred.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_set>

#include <json.hpp>

namespace ecoperf {

using nlohmann::json;

std::string_view to_string(LinkAlgo algo) noexcept {
  switch (algo) {
    case LinkAlgo::CN: return "CN";
    case LinkAlgo::RA: return "RA";
    case LinkAlgo::WRA: return "WRA";
    case LinkAlgo::IRA: return "IRA";
    case LinkAlgo::WICRA: return "WICRA";
  }
  return "RA";
}

LinkAlgo parse_link_algo(std::string_view text) {
  const auto t = to_lower(text);
  if (t == "cn") return LinkAlgo::CN;
  if (t == "ra") return LinkAlgo::RA;
  if (t == "wra") return LinkAlgo::WRA;
  if (t == "ira") return LinkAlgo::IRA;
  if (t == "wicra") return LinkAlgo::WICRA;
  throw Error(Errc::InvalidArgument, "unknown link-prediction algorithm '" + std::string(text) + "'");
}

namespace {

std::uint64_t pair_key(NodeIndex u, NodeIndex v) {
  return (std::uint64_t{std::min(u, v)} << 32) | std::max(u, v);
}

}  // namespace

EdgeSplit split_edges(const CollabGraph& g, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "test fraction must lie in (0, 1)");
  }
  const std::size_t m = g.edge_count();
  const auto needed = static_cast<std::size_t>(std::ceil(1.0 / test_fraction - 1e-12));
  if (m < needed) {
    throw Error(Errc::TooFewEdges,
                std::to_string(m) + " edges, need at least " + std::to_string(needed) + " for this fraction");
  }
  const std::size_t n_test = fraction_count(test_fraction, m);

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n_test; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> is_test(m, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

  GraphBuilder b(g.kind());
  for (NodeIndex n = 0; n < g.node_count(); ++n) b.add_node(g.name(n), g.node_kind(n));
  EdgeSplit split;
  split.seed = seed;
  split.test_fraction = test_fraction;
  const auto edges = g.edges();
  for (std::size_t i = 0; i < m; ++i) {
    if (is_test[i]) {
      split.test_edges.push_back(edges[i]);
    } else {
      b.add_weight(edges[i].u, edges[i].v, edges[i].weight);
    }
  }
  split.train = std::move(b).build();
  return split;
}

double score_pair(const CollabGraph& g, NodeIndex u, NodeIndex v, LinkAlgo algo) {
  if (u >= g.node_count() || v >= g.node_count()) throw Error(Errc::UnknownNode, "score_pair endpoint");
  if (u == v) throw Error(Errc::SameNode, "cannot score a node against itself");
  if (algo == LinkAlgo::IRA || algo == LinkAlgo::WICRA) {
    throw Error(Errc::NotImplemented, std::string(to_string(algo)) + " has no published formula; plug in a scorer");
  }
  const auto a = g.neighbors(u);
  const auto b = g.neighbors(v);
  double score = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].node < b[j].node) {
      ++i;
    } else if (b[j].node < a[i].node) {
      ++j;
    } else {
      const NodeIndex z = a[i].node;
      switch (algo) {
        case LinkAlgo::CN: score += 1.0; break;
        case LinkAlgo::RA: score += 1.0 / static_cast<double>(g.degree(z)); break;
        default: score += (a[i].weight + b[j].weight) / g.strength(z); break;
      }
      ++i, ++j;
    }
  }
  return score;
}

std::vector<Candidate> rank_candidates(const CollabGraph& g, NodeIndex u, std::size_t k, LinkAlgo algo) {
  if (u >= g.node_count()) throw Error(Errc::UnknownNode, "rank_candidates source");
  std::vector<bool> excluded(g.node_count(), false);
  excluded[u] = true;
  for (const auto& nb : g.neighbors(u)) excluded[nb.node] = true;
  std::vector<Candidate> out;
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    if (!excluded[v]) out.push_back({v, score_pair(g, u, v, algo)});
  }
  std::sort(out.begin(), out.end(), [&g](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return g.name(a.node) < g.name(b.node);
  });
  if (out.size() > k) out.resize(k);
  return out;
}

std::string LinkPredReport::to_json() const {
  return json{{"algo", algo},
              {"dataset", dataset},
              {"auc", auc},
              {"wall_time_seconds", wall_time_seconds},
              {"n_comparisons", n_comparisons},
              {"seed", seed}}
             .dump(2) +
         "\n";
}

std::string LinkPredReport::to_csv() const {
  return "model,dataset,auc,time_s\n" + algo + "," + dataset + "," + format_double(auc) + "," +
         format_double(wall_time_seconds) + "\n";
}

LinkPredReport evaluate_auc(const EdgeSplit& split, LinkAlgo algo, const AucOptions& options) {
  if (algo == LinkAlgo::IRA || algo == LinkAlgo::WICRA) score_pair(split.train, 0, 1, algo);  // throws
  const auto& g = split.train;
  return evaluate_auc(
      split, [&g, algo](NodeIndex u, NodeIndex v) { return score_pair(g, u, v, algo); }, to_string(algo), options);
}

LinkPredReport evaluate_auc(const EdgeSplit& split, const PairScorer& scorer, std::string_view algo_name,
                            const AucOptions& options) {
  if (options.n_comparisons < 1) throw Error(Errc::InvalidArgument, "n_comparisons must be >= 1");
  if (split.test_edges.empty()) throw Error(Errc::InvalidArgument, "split has no test edges");
  const auto& g = split.train;
  const std::uint64_t n = g.node_count();

  std::unordered_set<std::uint64_t> present;
  for (const auto& e : g.edges()) present.insert(pair_key(e.u, e.v));
  for (const auto& e : split.test_edges) present.insert(pair_key(e.u, e.v));
  if (n < 2 || present.size() >= n * (n - 1) / 2) throw Error(Errc::NoAbsentEdges, "graph is complete");

  const auto start = std::chrono::steady_clock::now();
  auto run = [&](std::size_t first, std::size_t last, std::uint64_t& wins, std::uint64_t& ties) {
    for (std::size_t i = first; i < last; ++i) {
      auto rng = counter_stream(options.seed, i);
      const auto& test = split.test_edges[rng.below(split.test_edges.size())];
      NodeIndex u, v;
      do {
        u = static_cast<NodeIndex>(rng.below(n));
        v = static_cast<NodeIndex>(rng.below(n));
      } while (u == v || present.count(pair_key(u, v)));
      const double s_test = scorer(test.u, test.v);
      const double s_absent = scorer(u, v);
      if (s_test > s_absent) {
        ++wins;
      } else if (s_test == s_absent) {
        ++ties;
      }
    }
  };

  const unsigned threads = std::max(1u, options.threads);
  std::vector<std::uint64_t> wins(threads, 0), ties(threads, 0);
  if (threads == 1) {
    run(0, options.n_comparisons, wins[0], ties[0]);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (options.n_comparisons + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t first = std::min(options.n_comparisons, t * chunk);
      const std::size_t last = std::min(options.n_comparisons, first + chunk);
      pool.emplace_back(run, first, last, std::ref(wins[t]), std::ref(ties[t]));
    }
    for (auto& th : pool) th.join();
  }
  const auto elapsed = std::chrono::steady_clock::now() - start;

  const std::uint64_t total_wins = std::accumulate(wins.begin(), wins.end(), std::uint64_t{0});
  const std::uint64_t total_ties = std::accumulate(ties.begin(), ties.end(), std::uint64_t{0});
  LinkPredReport report;
  report.algo = std::string(algo_name);
  report.dataset = options.dataset;
  report.auc = (static_cast<double>(total_wins) + 0.5 * static_cast<double>(total_ties)) /
               static_cast<double>(options.n_comparisons);
  report.wall_time_seconds = std::chrono::duration<double>(elapsed).count();
  report.n_comparisons = options.n_comparisons;
  report.seed = options.seed;
  return report;
}

}  // namespace ecoperf
