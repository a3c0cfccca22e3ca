#include "fixture.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <unistd.h>

namespace ecoperf::testing {

namespace {

constexpr int kCommunities = 4;
constexpr int kReposPer = 10;
constexpr int kDevsPer = 60;

const char* const kOrgs[kCommunities] = {"aurora", "basalt", "cobalt", "dune"};
const char* const kBotNames[] = {"dependabot[bot]", "renovate[bot]", "ci-bot", "mergebot", "stale[bot]", "release-bot"};

struct TypeChoice {
  const char* raw;
  EventType type;
  double weight;
};

const TypeChoice kHumanTypes[] = {
    {"IssueCommentEvent", EventType::IssueComment, 35}, {"PushEvent", EventType::Push, 18},
    {"PullRequestEvent", EventType::PROpen, 12},        {"PullRequestEvent", EventType::PRMerge, 5},
    {"IssuesEvent", EventType::IssueOpen, 8},           {"PullRequestReviewCommentEvent", EventType::PRReviewComment, 9},
    {"WatchEvent", EventType::Star, 8},                 {"ForkEvent", EventType::Fork, 3},
    {"CreateEvent", EventType::Other, 2},
};

// Zipf-like pick in [0, n): low indices are popular.
int zipf(SplitMix64& rng, int n) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += 1.0 / (i + 1);
  double x = rng.uniform() * total;
  for (int i = 0; i < n; ++i) {
    x -= 1.0 / (i + 1);
    if (x < 0.0) return i;
  }
  return n - 1;
}

std::string repo_name(int repo) {
  return std::string(kOrgs[repo / kReposPer]) + "/" + "proj-" + std::to_string(repo % kReposPer);
}

}  // namespace

std::vector<std::string> fixture_bots() { return {std::begin(kBotNames), std::end(kBotNames)}; }

std::vector<Event> fixture_events(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const auto start = Month{2023, 4}.begin();
  const std::int64_t span = (Month{2023, 7}.begin() - start).count();
  const int n_devs = kCommunities * kDevsPer;
  const int n_bots = static_cast<int>(std::size(kBotNames));

  double type_total = 0.0;
  for (const auto& t : kHumanTypes) type_total += t.weight;

  std::vector<Event> out;
  out.reserve(n);
  std::vector<std::int64_t> bot_clock(n_bots, 0);
  for (std::size_t i = 0; i < n; ++i) {
    Event e;
    e.event_id = std::to_string(1000000 + i);
    if (rng.uniform() < 0.08) {
      // Automation: a few home repos, pushes and comments on an exact cadence at a fixed hour.
      const int b = static_cast<int>(rng.below(n_bots));
      const int repo = (b * 7 + static_cast<int>(rng.below(3))) % (kCommunities * kReposPer);
      const bool push = b % 2 == 0;
      e.type = push ? EventType::Push : EventType::IssueComment;
      e.raw_type = push ? "PushEvent" : "IssueCommentEvent";
      e.actor_id = 900000 + b;
      e.actor_login = kBotNames[b];
      e.repo_id = 5000 + repo;
      e.repo_name = repo_name(repo);
      bot_clock[b] = (bot_clock[b] + 86400) % span;
      e.created_at = start + std::chrono::seconds(bot_clock[b] + 3 * 3600 + b * 60);
    } else {
      const int dev = static_cast<int>(rng.below(n_devs));
      const int home = dev / kDevsPer;
      const int community = rng.uniform() < 0.85 ? home : static_cast<int>(rng.below(kCommunities));
      const int repo = community * kReposPer + zipf(rng, kReposPer);
      double x = rng.uniform() * type_total;
      const TypeChoice* choice = &kHumanTypes[0];
      for (const auto& t : kHumanTypes) {
        choice = &t;
        x -= t.weight;
        if (x < 0.0) break;
      }
      e.type = choice->type;
      e.raw_type = choice->raw;
      e.actor_id = 1000 + dev;
      e.actor_login = "dev-" + std::to_string(dev);
      e.repo_id = 5000 + repo;
      e.repo_name = repo_name(repo);
      e.created_at = start + std::chrono::seconds(static_cast<std::int64_t>(rng.below(span)));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string fixture_ndjson(std::size_t n, std::uint64_t seed) {
  std::string text;
  for (const auto& e : fixture_events(n, seed)) {
    text += serialize_event(e);
    text += '\n';
  }
  return text;
}

CollabGraph planted_partition(int block, double p_in, double p_out, std::uint64_t seed) {
  SplitMix64 rng(seed);
  GraphBuilder b(GraphKind::RepoRelation);
  const int n = 2 * block;
  for (int i = 0; i < n; ++i) b.add_node("n" + std::to_string(i), NodeKind::Repo);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = (i < block) == (j < block) ? p_in : p_out;
      if (rng.uniform() < p) b.add_weight(static_cast<NodeIndex>(i), static_cast<NodeIndex>(j), 1.0);
    }
  }
  return std::move(b).build();
}

CollabGraph random_graph(int n, double p, std::uint64_t seed, bool weighted) {
  SplitMix64 rng(seed);
  GraphBuilder b(GraphKind::RepoRelation);
  for (int i = 0; i < n; ++i) b.add_node("n" + std::to_string(i), NodeKind::Repo);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) {
        b.add_weight(static_cast<NodeIndex>(i), static_cast<NodeIndex>(j),
                     weighted ? 1.0 + static_cast<double>(rng.below(5)) : 1.0);
      }
    }
  }
  return std::move(b).build();
}

double exact_auc(const CollabGraph& train, std::span<const Edge> test,
                 const std::function<double(NodeIndex, NodeIndex)>& score) {
  const auto n = static_cast<NodeIndex>(train.node_count());
  std::set<std::pair<NodeIndex, NodeIndex>> held;
  for (const auto& e : test) held.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  std::vector<double> absent;
  for (NodeIndex u = 0; u < n; ++u) {
    for (NodeIndex v = u + 1; v < n; ++v) {
      if (!train.has_edge(u, v) && !held.count({u, v})) absent.push_back(score(u, v));
    }
  }
  double wins = 0.0;
  for (const auto& e : test) {
    const double s = score(e.u, e.v);
    for (double a : absent) wins += s > a ? 1.0 : s == a ? 0.5 : 0.0;
  }
  return wins / (static_cast<double>(test.size()) * static_cast<double>(absent.size()));
}

std::vector<AccountFeatures> separable_accounts(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<AccountFeatures> out;
  for (std::size_t i = 0; i < n; ++i) {
    AccountFeatures f;
    f.actor_login = "acct-" + std::to_string(i);
    const bool bot = i % 2 == 0;
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kFeatureCount); ++j) f.values[j] = rng.uniform();
    f.values[1] = (bot ? 2.0 : -2.0) + rng.uniform() - 0.5;
    f.label = bot ? AccountLabel::Bot : AccountLabel::Human;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<AccountFeatures> xor_accounts(std::size_t per_quadrant, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<AccountFeatures> out;
  for (int q = 0; q < 4; ++q) {
    const double sx = q & 1 ? 1.0 : -1.0;
    const double sy = q & 2 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < per_quadrant; ++i) {
      AccountFeatures f;
      f.actor_login = "xor-" + std::to_string(q) + "-" + std::to_string(i);
      f.values[1] = sx * (0.5 + rng.uniform());
      f.values[2] = sy * (0.5 + rng.uniform());
      f.label = sx * sy > 0 ? AccountLabel::Bot : AccountLabel::Human;
      out.push_back(std::move(f));
    }
  }
  return out;
}

std::filesystem::path data_dir() { return ECOPERF_TEST_DATA_DIR; }

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("ecoperf-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace ecoperf::testing
