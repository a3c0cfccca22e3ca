#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <thread>
#include <vector>

#include "ecoperf/collab_graph.hpp"
#include "ecoperf/common.hpp"

namespace ecoperf::detail {

template <typename Scalar>
struct PowerIterationResult {
  Vector<Scalar> scores;
  int iterations = 0;
  bool converged = false;
};

/// Synchronous power iteration of r_i = (1-d)/N + d * sum_j (w(i,j) / s(j)) r_j over `active` nodes.
/// `edge_weight` maps a Neighbor to the weight used; `active` must contain every endpoint of every edge.
/// Each row is a pull over its sorted adjacency, so the result does not depend on `threads`.
template <typename Scalar, typename WeightFn>
PowerIterationResult<Scalar> power_iteration(const CollabGraph& g, std::span<const NodeIndex> active,
                                             WeightFn edge_weight, Scalar damping, Scalar tol, int max_iter,
                                             unsigned threads) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  const auto n_active = static_cast<Scalar>(active.size());

  Vector<Scalar> out_strength = Vector<Scalar>::Zero(n);
  for (NodeIndex i : active) {
    for (const auto& nb : g.neighbors(i)) out_strength[i] += edge_weight(nb);
  }

  PowerIterationResult<Scalar> result;
  Vector<Scalar> rank = Vector<Scalar>::Zero(n);
  for (NodeIndex i : active) rank[i] = Scalar(1) / n_active;
  Vector<Scalar> next = rank;
  const Scalar teleport = (Scalar(1) - damping) / n_active;

  auto update_rows = [&](std::size_t first, std::size_t last) {
    for (std::size_t k = first; k < last; ++k) {
      const NodeIndex i = active[k];
      Scalar acc(0);
      for (const auto& nb : g.neighbors(i)) acc += edge_weight(nb) / out_strength[nb.node] * rank[nb.node];
      next[i] = teleport + damping * acc;
    }
  };

  threads = std::max(1u, threads);
  for (int it = 0; it < max_iter; ++it) {
    if (threads == 1 || active.size() < 2 * threads) {
      update_rows(0, active.size());
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (active.size() + threads - 1) / threads;
      for (unsigned t = 0; t < threads; ++t) {
        const std::size_t first = t * chunk;
        const std::size_t last = std::min(active.size(), first + chunk);
        if (first < last) pool.emplace_back(update_rows, first, last);
      }
      for (auto& th : pool) th.join();
    }
    const Scalar change = (next - rank).cwiseAbs().maxCoeff();
    rank.swap(next);
    result.iterations = it + 1;
    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  result.scores = std::move(rank);
  return result;
}

}  // namespace ecoperf::detail
