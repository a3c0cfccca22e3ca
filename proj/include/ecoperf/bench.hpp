#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ecoperf/common.hpp"

namespace ecoperf {

enum class Scenario { EnterpriseGovernance, SoftwareDevelopment, CommunityOperations, EcosystemStrategy };
enum class TaskType { Regression, Classification, Recommendation, Ranking, NetworkBuilding, AnomalyDetection };

std::string_view to_string(Scenario s) noexcept;
std::string_view to_string(TaskType t) noexcept;
std::optional<Scenario> parse_scenario(std::string_view text);
std::optional<TaskType> parse_task_type(std::string_view text);

/// Metric ids accepted for a task type.
const std::vector<std::string>& valid_metrics(TaskType type);

struct DatasetRef {
  std::string path;
  std::string format;    // "edgelist", "metric_matrix" or "features"
  std::string checksum;  // "sha256:<hex>" of the file
};

struct ModelRef {
  std::string adapter;
  nlohmann::json params = nlohmann::json::object();
};

/// The six core elements of a benchmark plus its run configuration.
struct BenchmarkSpec {
  std::string task_name;
  Scenario scenario = Scenario::CommunityOperations;
  TaskType task_type = TaskType::Recommendation;
  DatasetRef dataset;
  ModelRef model;
  std::vector<std::string> metrics;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  /// Throws ValidationError listing every violated rule.
  static BenchmarkSpec from_json(const nlohmann::json& obj);
  bool operator==(const BenchmarkSpec& other) const { return to_json() == other.to_json(); }
};

/// Every rule the object breaks, e.g. "metrics: empty". Empty when valid.
std::vector<std::string> validate_spec(const nlohmann::json& obj);

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

struct TaskEntry {
  std::string task;
  std::string data_type;
  std::string problem_type;
  std::string scene;
  std::string research_field;
  bool implemented;
};

/// The nine built-in benchmark tasks; three are runnable.
const std::vector<TaskEntry>& task_catalog();
std::string catalog_json(std::span<const std::string> registered_ids);

std::string checksum_of(const std::string& path);

struct RunResult {
  std::string spec_id;
  std::string task_name;
  std::map<std::string, std::optional<double>> metrics;
  double wall_time_seconds = 0.0;
  std::vector<std::string> artifacts;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Spec and run storage: `<root>/specs/<id>.json`, `<root>/runs/<id>/<timestamp>.json`.
/// Reads are lock-free; writes go through `<root>/.lock`.
class Registry {
 public:
  explicit Registry(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  /// Content-hash id; registering identical content returns the existing id.
  std::string register_spec(const BenchmarkSpec& spec);
  BenchmarkSpec load(const std::string& id) const;  // throws UnknownId
  bool contains(const std::string& id) const;
  std::vector<std::string> ids() const;
  /// Stored run records for a spec, oldest first. Throws UnknownId.
  std::vector<nlohmann::json> runs(const std::string& id) const;
  std::string save_run(const RunResult& result);

 private:
  std::filesystem::path root_;
};

std::string spec_id(const BenchmarkSpec& spec);

/// Dispatches to the link-prediction, completion or bot-classification harness and persists the result.
/// Relative dataset paths resolve against `data_dir`.
RunResult run_benchmark(Registry& registry, const std::string& id, const std::filesystem::path& data_dir = ".");

// Leaderboards ------------------------------------------------------------------

struct LeaderboardEntry {
  std::size_t rank;
  std::string entity;
  double value;
  bool operator==(const LeaderboardEntry&) const = default;
};

/// Competition ranking: equal values share a rank and the next rank skips.
struct Leaderboard {
  std::string index_name;
  std::string context;
  std::vector<LeaderboardEntry> entries;
  bool operator==(const Leaderboard&) const = default;
};

/// Descending by value; ties share a rank and display in entity order. Throws on non-finite values.
Leaderboard build_leaderboard(std::span<const std::pair<std::string, double>> results, std::string index_name,
                              std::string context);
/// First n entries.
Leaderboard top_n(Leaderboard board, std::size_t n);

enum class ExportFormat { Json, Csv, Html };
ExportFormat parse_export_format(std::string_view text);

std::string export_leaderboard(const Leaderboard& board, ExportFormat format);
Leaderboard parse_leaderboard_json(std::string_view text);
/// Entries only; index_name and context are not part of the CSV form.
Leaderboard parse_leaderboard_csv(std::string_view text);

}  // namespace ecoperf
