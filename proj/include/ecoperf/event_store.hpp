#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecoperf/common.hpp"

namespace ecoperf {

enum class EventType { IssueOpen, IssueComment, PROpen, PRMerge, PRReviewComment, Push, Star, Fork, Other };

/// Canonical name of a type ("IssueComment", ...). Other maps to "Other".
std::string_view type_name(EventType type) noexcept;

/// One timestamped actor/repo/type record.
struct Event {
  std::string event_id;
  EventType type = EventType::Other;
  std::string raw_type;  // type string exactly as it appeared in the log
  std::int64_t actor_id = 0;
  std::string actor_login;
  std::int64_t repo_id = 0;
  std::string repo_name;
  Timestamp created_at{};

  Month month() const { return Month::of(created_at); }
  /// Key used for weighting and per-type statistics: canonical name, or the raw string for Other.
  std::string type_key() const;

  bool operator==(const Event&) const = default;
};

enum class ParseErrorKind { Malformed, MissingField, InvalidField, BadTimestamp, BadRepoName };

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, std::string field, const std::string& detail);
  ParseErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ParseErrorKind kind_;
  std::string field_;
};

/// Parses one GH-Archive style NDJSON object. Throws ParseError.
Event parse_event(std::string_view line);

/// Canonical single-line form; parse_event(serialize_event(e)) == e.
std::string serialize_event(const Event& event);

struct PartitionInfo {
  Month month;
  std::size_t event_count = 0;
  std::string file;  // relative to the store root
};

struct StoreManifest {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::vector<PartitionInfo> partitions;  // unique months, ascending

  std::string to_json() const;
  static StoreManifest from_json(std::string_view text);
  const PartitionInfo* find(Month month) const;
  std::size_t total_events() const;
};

struct RejectedLine {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t duplicates = 0;
  std::map<std::string, std::size_t> per_month_counts;  // accepted per "YYYY-MM"
  std::vector<RejectedLine> rejects;
};

/// Repo and time filter for queries. An empty repo set means every repo.
struct EventQuery {
  std::set<std::string> repos;
  std::optional<MonthRange> range;
  std::optional<std::string> actor_login;
};

struct RepoMonthCounts {
  std::size_t participants = 0;
  std::size_t log_increment = 0;
  bool operator==(const RepoMonthCounts&) const = default;
};

/// Read-only snapshot of an event store: the manifest as committed when opened.
/// Partitions are read only up to the committed event count, so a concurrent
/// ingest never exposes half-written data.
class EventStore {
 public:
  /// Opens an existing store. A missing manifest yields an empty store.
  /// Throws ManifestCorrupt when a partition holds fewer lines than the manifest claims.
  static EventStore open(const std::filesystem::path& root);

  const std::filesystem::path& root() const noexcept { return root_; }
  const StoreManifest& manifest() const noexcept { return manifest_; }
  bool has_month(Month month) const { return manifest_.find(month) != nullptr; }
  std::optional<Month> latest_month() const;

  /// Events of one partition in (created_at, event_id) order; empty if absent.
  std::vector<Event> partition(Month month) const;
  /// Events matching the query in (created_at, event_id) order.
  std::vector<Event> query(const EventQuery& query) const;

 private:
  std::filesystem::path root_;
  StoreManifest manifest_;
};

/// Appends events to their monthly partitions and commits the manifest atomically.
/// Duplicate event ids within a partition keep the first copy.
IngestReport ingest_stream(std::span<const std::string> lines, const std::filesystem::path& root);
IngestReport ingest_stream(std::istream& input, const std::filesystem::path& root);

std::vector<Event> query_events(const EventStore& store, const std::set<std::string>& repo_filter,
                                MonthRange range);

/// Participants (distinct actors) and log increment (event count) per repo for one month.
/// `log_types`, when given, restricts which type keys count toward the log increment.
std::map<std::string, RepoMonthCounts> monthly_event_counts(
    const EventStore& store, Month month, const std::optional<std::set<std::string>>& log_types = std::nullopt);

}  // namespace ecoperf
