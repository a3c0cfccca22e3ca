#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ecoperf/collab_graph.hpp"

namespace ecoperf {

enum class LinkAlgo { CN, RA, WRA, IRA, WICRA };

std::string_view to_string(LinkAlgo algo) noexcept;
LinkAlgo parse_link_algo(std::string_view text);

/// Train graph plus held-out test edges. Node indices are shared with the source graph.
struct EdgeSplit {
  CollabGraph train;
  std::vector<Edge> test_edges;
  std::uint64_t seed = 0;
  double test_fraction = 0.1;
};

/// Uniform random test subset; its size is fraction * |E| rounded to nearest (ties down), at least 1.
/// Throws TooFewEdges when |E| < ceil(1 / fraction).
EdgeSplit split_edges(const CollabGraph& g, double test_fraction, std::uint64_t seed);

/// CN = |G(u) & G(v)|, RA = sum 1/deg(z), WRA = sum (w(u,z) + w(z,v)) / s(z) over common neighbors z.
/// IRA and WICRA throw NotImplemented.
double score_pair(const CollabGraph& g, NodeIndex u, NodeIndex v, LinkAlgo algo);

struct Candidate {
  NodeIndex node;
  double score;
};

/// Non-neighbors of u ranked by descending score, ties by node name; at most k entries.
std::vector<Candidate> rank_candidates(const CollabGraph& g, NodeIndex u, std::size_t k, LinkAlgo algo = LinkAlgo::RA);

struct LinkPredReport {
  std::string algo;
  std::string dataset;
  double auc = 0.0;
  double wall_time_seconds = 0.0;
  std::size_t n_comparisons = 0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  /// CSV `model,dataset,auc,time_s` with header.
  std::string to_csv() const;
};

using PairScorer = std::function<double(NodeIndex, NodeIndex)>;

struct AucOptions {
  std::size_t n_comparisons = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string dataset;
};

/// Sampling AUC: each comparison draws a test edge and an absent pair (not in train or test)
/// from the counter stream (seed, comparison index); AUC = (wins + ties / 2) / n.
/// Wall time covers scoring and comparison only.
LinkPredReport evaluate_auc(const EdgeSplit& split, LinkAlgo algo, const AucOptions& options);
LinkPredReport evaluate_auc(const EdgeSplit& split, const PairScorer& scorer, std::string_view algo_name,
                            const AucOptions& options);

}  // namespace ecoperf
