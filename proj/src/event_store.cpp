#include "ecoperf/event_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace ecoperf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view type_name(EventType type) noexcept {
  switch (type) {
    case EventType::IssueOpen: return "IssueOpen";
    case EventType::IssueComment: return "IssueComment";
    case EventType::PROpen: return "PROpen";
    case EventType::PRMerge: return "PRMerge";
    case EventType::PRReviewComment: return "PRReviewComment";
    case EventType::Push: return "Push";
    case EventType::Star: return "Star";
    case EventType::Fork: return "Fork";
    case EventType::Other: return "Other";
  }
  return "Other";
}

std::string Event::type_key() const {
  return type == EventType::Other ? raw_type : std::string(type_name(type));
}

ParseError::ParseError(ParseErrorKind kind, std::string field, const std::string& detail)
    : Error(Errc::ParseError, field.empty() ? detail : field + ": " + detail), kind_(kind), field_(std::move(field)) {}

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) {
    throw ParseError(ParseErrorKind::MissingField, path, "missing");
  }
  return obj.at(key);
}

std::int64_t positive_id(const json& value, const std::string& path) {
  std::int64_t id = 0;
  if (value.is_number_integer()) {
    id = value.get<std::int64_t>();
  } else if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    try {
      std::size_t used = 0;
      id = std::stoll(s, &used);
      if (used != s.size()) id = 0;
    } catch (const std::exception&) {
      id = 0;
    }
  }
  if (id <= 0) throw ParseError(ParseErrorKind::InvalidField, path, "must be a positive integer");
  return id;
}

std::string string_field(const json& value, const std::string& path) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  throw ParseError(ParseErrorKind::InvalidField, path, "must be a string");
}

EventType classify(const std::string& raw, const json& obj) {
  if (raw == "IssueCommentEvent") return EventType::IssueComment;
  if (raw == "IssuesEvent") return EventType::IssueOpen;
  if (raw == "PullRequestReviewCommentEvent") return EventType::PRReviewComment;
  if (raw == "PushEvent") return EventType::Push;
  if (raw == "WatchEvent") return EventType::Star;
  if (raw == "ForkEvent") return EventType::Fork;
  if (raw == "PullRequestEvent") {
    if (obj.contains("payload") && obj["payload"].is_object()) {
      const auto& p = obj["payload"];
      const bool merged = p.contains("pull_request") && p["pull_request"].is_object() &&
                          p["pull_request"].value("merged", false) == true;
      if (merged || p.value("action", "") == "merged") return EventType::PRMerge;
    }
    return EventType::PROpen;
  }
  return EventType::Other;
}

}  // namespace

Event parse_event(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(ParseErrorKind::Malformed, "", std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(ParseErrorKind::Malformed, "", "expected a JSON object");

  Event ev;
  ev.event_id = string_field(require(obj, "id", "id"), "id");
  if (ev.event_id.empty()) throw ParseError(ParseErrorKind::InvalidField, "id", "must be non-empty");
  ev.raw_type = string_field(require(obj, "type", "type"), "type");
  ev.type = classify(ev.raw_type, obj);

  const auto& actor = require(obj, "actor", "actor");
  ev.actor_id = positive_id(require(actor, "id", "actor.id"), "actor.id");
  ev.actor_login = string_field(require(actor, "login", "actor.login"), "actor.login");

  const auto& repo = require(obj, "repo", "repo");
  ev.repo_id = positive_id(require(repo, "id", "repo.id"), "repo.id");
  ev.repo_name = string_field(require(repo, "name", "repo.name"), "repo.name");
  const auto slash = ev.repo_name.find('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == ev.repo_name.size() ||
      ev.repo_name.find('/', slash + 1) != std::string::npos) {
    throw ParseError(ParseErrorKind::BadRepoName, "repo.name", "expected owner/name, got '" + ev.repo_name + "'");
  }

  const auto& created = require(obj, "created_at", "created_at");
  if (!created.is_string()) throw ParseError(ParseErrorKind::BadTimestamp, "created_at", "must be a string");
  try {
    ev.created_at = parse_rfc3339(created.get_ref<const std::string&>());
  } catch (const Error& e) {
    throw ParseError(ParseErrorKind::BadTimestamp, "created_at", e.what());
  }
  return ev;
}

std::string serialize_event(const Event& e) {
  json obj = {
      {"id", e.event_id},
      {"type", e.raw_type},
      {"actor", {{"id", e.actor_id}, {"login", e.actor_login}}},
      {"repo", {{"id", e.repo_id}, {"name", e.repo_name}}},
      {"created_at", format_rfc3339(e.created_at)},
  };
  if (e.type == EventType::PRMerge) obj["payload"] = {{"action", "closed"}, {"pull_request", {{"merged", true}}}};
  return obj.dump();
}

// Manifest ----------------------------------------------------------------

std::string StoreManifest::to_json() const {
  json parts = json::array();
  for (const auto& p : partitions) {
    parts.push_back({{"month", p.month.str()}, {"event_count", p.event_count}, {"file", p.file}});
  }
  return json{{"schema_version", schema_version}, {"partitions", parts}}.dump(2) + "\n";
}

StoreManifest StoreManifest::from_json(std::string_view text) {
  StoreManifest m;
  try {
    const auto obj = json::parse(text);
    m.schema_version = obj.at("schema_version").get<int>();
    for (const auto& p : obj.at("partitions")) {
      m.partitions.push_back(
          {Month::parse(p.at("month").get<std::string>()), p.at("event_count").get<std::size_t>(),
           p.at("file").get<std::string>()});
    }
  } catch (const std::exception& e) {
    throw Error(Errc::ManifestCorrupt, std::string("unreadable manifest: ") + e.what());
  }
  if (m.schema_version != kSchemaVersion) {
    throw Error(Errc::ManifestCorrupt, "unsupported schema_version " + std::to_string(m.schema_version));
  }
  for (std::size_t i = 1; i < m.partitions.size(); ++i) {
    if (!(m.partitions[i - 1].month < m.partitions[i].month)) {
      throw Error(Errc::ManifestCorrupt, "partition months not unique and ascending");
    }
  }
  return m;
}

const PartitionInfo* StoreManifest::find(Month month) const {
  auto it = std::lower_bound(partitions.begin(), partitions.end(), month,
                             [](const PartitionInfo& p, Month m) { return p.month < m; });
  return it != partitions.end() && it->month == month ? &*it : nullptr;
}

std::size_t StoreManifest::total_events() const {
  std::size_t n = 0;
  for (const auto& p : partitions) n += p.event_count;
  return n;
}

namespace {

std::string read_file(const fs::path& path) { return read_text_file(path.string()); }

void write_atomic(const fs::path& path, std::string_view content) { write_file_atomic(path.string(), content); }

/// First `limit` lines of a partition file.
std::vector<std::string> read_lines(const fs::path& path, std::size_t limit, std::size_t* on_disk = nullptr) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::string line;
  std::size_t total = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++total;
    if (lines.size() < limit) lines.push_back(std::move(line));
  }
  if (on_disk) *on_disk = total;
  return lines;
}

StoreManifest load_manifest(const fs::path& root, bool strict) {
  const fs::path path = root / "manifest.json";
  if (!fs::exists(path)) return {};
  auto manifest = StoreManifest::from_json(read_file(path));
  for (const auto& p : manifest.partitions) {
    const fs::path file = root / p.file;
    if (!fs::exists(file)) throw Error(Errc::ManifestCorrupt, "missing partition file " + p.file);
    std::size_t on_disk = 0;
    read_lines(file, 0, &on_disk);
    if (on_disk < p.event_count || (strict && on_disk != p.event_count)) {
      throw Error(Errc::ManifestCorrupt, p.file + " holds " + std::to_string(on_disk) + " events, manifest says " +
                                             std::to_string(p.event_count));
    }
  }
  return manifest;
}

bool event_order(const Event& a, const Event& b) {
  if (a.created_at != b.created_at) return a.created_at < b.created_at;
  return a.event_id < b.event_id;
}

}  // namespace

EventStore EventStore::open(const fs::path& root) {
  EventStore store;
  store.root_ = root;
  store.manifest_ = load_manifest(root, false);
  return store;
}

std::optional<Month> EventStore::latest_month() const {
  if (manifest_.partitions.empty()) return std::nullopt;
  return manifest_.partitions.back().month;
}

std::vector<Event> EventStore::partition(Month month) const {
  const auto* info = manifest_.find(month);
  if (!info) return {};
  std::vector<Event> events;
  events.reserve(info->event_count);
  for (const auto& line : read_lines(root_ / info->file, info->event_count)) events.push_back(parse_event(line));
  std::sort(events.begin(), events.end(), event_order);
  return events;
}

std::vector<Event> EventStore::query(const EventQuery& q) const {
  std::vector<Event> out;
  for (const auto& p : manifest_.partitions) {
    if (q.range && !q.range->contains(p.month)) continue;
    for (auto& e : partition(p.month)) {
      if (!q.repos.empty() && !q.repos.count(e.repo_name)) continue;
      if (q.actor_login && e.actor_login != *q.actor_login) continue;
      out.push_back(std::move(e));
    }
  }
  // Partitions are disjoint months in ascending order, so the concatenation is already sorted.
  return out;
}

std::vector<Event> query_events(const EventStore& store, const std::set<std::string>& repo_filter, MonthRange range) {
  EventQuery q;
  q.repos = repo_filter;
  q.range = range;
  return store.query(q);
}

IngestReport ingest_stream(std::span<const std::string> lines, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root / "events", ec);
  if (ec) throw Error(Errc::IoError, "cannot create store at " + root.string() + ": " + ec.message());
  FileLock lock((root / ".lock").string());
  StoreManifest manifest = load_manifest(root, true);

  IngestReport report;
  std::map<Month, std::vector<Event>> incoming;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      Event e = parse_event(lines[i]);
      incoming[e.month()].push_back(std::move(e));
    } catch (const ParseError& err) {
      ++report.rejected;
      report.rejects.push_back({i + 1, err.what()});
    }
  }

  for (auto& [month, events] : incoming) {
    const std::string rel = "events/" + month.str() + ".ndjson";
    const PartitionInfo* existing = manifest.find(month);
    std::string content;
    std::unordered_set<std::string> seen;
    std::size_t count = 0;
    if (existing) {
      for (auto& line : read_lines(root / existing->file, existing->event_count)) {
        seen.insert(parse_event(line).event_id);
        content += line;
        content += '\n';
        ++count;
      }
    }
    std::size_t added = 0;
    for (const auto& e : events) {
      if (!seen.insert(e.event_id).second) {
        ++report.duplicates;
        continue;
      }
      content += serialize_event(e);
      content += '\n';
      ++added;
    }
    if (added == 0) continue;
    write_atomic(root / rel, content);
    report.accepted += added;
    report.per_month_counts[month.str()] = added;
    if (existing) {
      for (auto& p : manifest.partitions) {
        if (p.month == month) p.event_count = count + added;
      }
    } else {
      manifest.partitions.push_back({month, count + added, rel});
      std::sort(manifest.partitions.begin(), manifest.partitions.end(),
                [](const PartitionInfo& a, const PartitionInfo& b) { return a.month < b.month; });
    }
  }
  write_atomic(root / "manifest.json", manifest.to_json());
  return report;
}

IngestReport ingest_stream(std::istream& input, const fs::path& root) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(input, line)) lines.push_back(std::move(line));
  return ingest_stream(std::span<const std::string>(lines), root);
}

std::map<std::string, RepoMonthCounts> monthly_event_counts(const EventStore& store, Month month,
                                                            const std::optional<std::set<std::string>>& log_types) {
  std::map<std::string, std::unordered_set<std::int64_t>> actors;
  std::map<std::string, RepoMonthCounts> out;
  for (const auto& e : store.partition(month)) {
    actors[e.repo_name].insert(e.actor_id);
    auto& counts = out[e.repo_name];
    if (!log_types || log_types->count(e.type_key())) ++counts.log_increment;
  }
  for (auto& [repo, counts] : out) counts.participants = actors[repo].size();
  return out;
}

}  // namespace ecoperf
