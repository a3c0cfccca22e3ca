#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ecoperf/botdetect.hpp"
#include "ecoperf/collab_graph.hpp"
#include "ecoperf/event_store.hpp"

namespace ecoperf::testing {

/// Synthetic three-month event log: 40 repos in four communities, 240 developers who mostly stay
/// in their home community, and six automation accounts on a fixed cadence. Fully determined by the seed.
std::vector<Event> fixture_events(std::size_t n = 10000, std::uint64_t seed = 20230601);
std::string fixture_ndjson(std::size_t n = 10000, std::uint64_t seed = 20230601);

/// Logins of the automation accounts in the fixture.
std::vector<std::string> fixture_bots();

/// Two blocks of `block` nodes; each pair links with p_in inside a block and p_out across, unit weights.
CollabGraph planted_partition(int block = 30, double p_in = 0.3, double p_out = 0.02, std::uint64_t seed = 42);

/// Erdos-Renyi graph with unit weights (or weights drawn from 1..5 when `weighted`).
CollabGraph random_graph(int n, double p, std::uint64_t seed, bool weighted = false);

/// Exact AUC over every (test edge, absent pair) combination; ties count half.
double exact_auc(const CollabGraph& train, std::span<const Edge> test, const std::function<double(NodeIndex, NodeIndex)>& score);

/// Labeled accounts split by a margin along feature 1; a linear model can reach accuracy 1.
std::vector<AccountFeatures> separable_accounts(std::size_t n, std::uint64_t seed);
/// Labels follow the XOR of the signs of features 1 and 2, which no linear boundary separates.
std::vector<AccountFeatures> xor_accounts(std::size_t per_quadrant, std::uint64_t seed);

/// Directory holding the bundled data files.
std::filesystem::path data_dir();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ecoperf::testing
