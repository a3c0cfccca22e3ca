#include "ecoperf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ecoperf/botdetect.hpp"
#include "ecoperf/collab_graph.hpp"
#include "ecoperf/linkpred.hpp"
#include "ecoperf/tseries.hpp"

namespace ecoperf {

namespace fs = std::filesystem;
using nlohmann::json;

// Enumerations ------------------------------------------------------------------

std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::EnterpriseGovernance: return "EnterpriseGovernance";
    case Scenario::SoftwareDevelopment: return "SoftwareDevelopment";
    case Scenario::CommunityOperations: return "CommunityOperations";
    case Scenario::EcosystemStrategy: return "EcosystemStrategy";
  }
  return "CommunityOperations";
}

std::string_view to_string(TaskType t) noexcept {
  switch (t) {
    case TaskType::Regression: return "Regression";
    case TaskType::Classification: return "Classification";
    case TaskType::Recommendation: return "Recommendation";
    case TaskType::Ranking: return "Ranking";
    case TaskType::NetworkBuilding: return "NetworkBuilding";
    case TaskType::AnomalyDetection: return "AnomalyDetection";
  }
  return "Regression";
}

std::optional<Scenario> parse_scenario(std::string_view text) {
  for (auto s : {Scenario::EnterpriseGovernance, Scenario::SoftwareDevelopment, Scenario::CommunityOperations,
                 Scenario::EcosystemStrategy}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<TaskType> parse_task_type(std::string_view text) {
  for (auto t : {TaskType::Regression, TaskType::Classification, TaskType::Recommendation, TaskType::Ranking,
                 TaskType::NetworkBuilding, TaskType::AnomalyDetection}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

const std::vector<std::string>& valid_metrics(TaskType type) {
  static const std::map<TaskType, std::vector<std::string>> table{
      {TaskType::Regression, {"nmse", "nrmse", "nmae"}},
      {TaskType::Classification, {"accuracy", "precision", "recall", "f1", "auc"}},
      {TaskType::Recommendation, {"auc", "wall_time"}},
      {TaskType::Ranking, {"kendall_tau", "top_n_overlap"}},
      {TaskType::NetworkBuilding, {"density", "modularity"}},
      {TaskType::AnomalyDetection, {"precision", "recall", "f1"}},
  };
  return table.at(type);
}

// Spec --------------------------------------------------------------------------

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(Errc::ValidationError,
            [&] {
              std::string msg;
              for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v;
              return msg;
            }()),
      violations_(std::move(violations)) {}

namespace {

bool non_empty_string(const json& obj, const char* key) {
  return obj.contains(key) && obj[key].is_string() && !obj[key].get_ref<const std::string&>().empty();
}

}  // namespace

std::vector<std::string> validate_spec(const json& obj) {
  std::vector<std::string> v;
  if (!obj.is_object()) return {"spec: must be a JSON object"};
  if (!non_empty_string(obj, "task_name")) v.push_back("task_name: empty");

  if (!non_empty_string(obj, "scenario")) {
    v.push_back("scenario: empty");
  } else if (!parse_scenario(obj["scenario"].get<std::string>())) {
    v.push_back("scenario: unknown '" + obj["scenario"].get<std::string>() + "'");
  }

  std::optional<TaskType> type;
  if (!non_empty_string(obj, "task_type")) {
    v.push_back("task_type: empty");
  } else if (!(type = parse_task_type(obj["task_type"].get<std::string>()))) {
    v.push_back("task_type: unknown '" + obj["task_type"].get<std::string>() + "'");
  }

  if (!obj.contains("dataset") || !obj["dataset"].is_object()) {
    v.push_back("dataset: empty");
  } else {
    const auto& d = obj["dataset"];
    for (const char* key : {"path", "format", "checksum"}) {
      if (!non_empty_string(d, key)) v.push_back(std::string("dataset.") + key + ": empty");
    }
    if (non_empty_string(d, "format")) {
      const auto f = d["format"].get<std::string>();
      if (f != "edgelist" && f != "metric_matrix" && f != "features") {
        v.push_back("dataset.format: unknown '" + f + "'");
      }
    }
  }

  if (!obj.contains("model") || !obj["model"].is_object()) {
    v.push_back("model: empty");
  } else {
    if (!non_empty_string(obj["model"], "adapter")) v.push_back("model.adapter: empty");
    if (obj["model"].contains("params") && !obj["model"]["params"].is_object()) {
      v.push_back("model.params: must be an object");
    }
  }

  if (!obj.contains("metrics") || !obj["metrics"].is_array() || obj["metrics"].empty()) {
    v.push_back("metrics: empty");
  } else {
    for (const auto& m : obj["metrics"]) {
      if (!m.is_string()) {
        v.push_back("metrics: ids must be strings");
        continue;
      }
      const auto id = m.get<std::string>();
      if (type) {
        const auto& ok = valid_metrics(*type);
        if (std::find(ok.begin(), ok.end(), id) == ok.end()) {
          v.push_back("metrics: '" + id + "' is not valid for " + std::string(to_string(*type)));
        }
      }
    }
  }
  auto non_negative_integer = [](const json& x) {
    return x.is_number_unsigned() || (x.is_number_integer() && x.get<std::int64_t>() >= 0);
  };
  if (obj.contains("run") &&
      (!obj["run"].is_object() || (obj["run"].contains("seed") && !non_negative_integer(obj["run"]["seed"])))) {
    v.push_back("run.seed: must be a non-negative integer");
  }
  return v;
}

json BenchmarkSpec::to_json() const {
  return json{{"task_name", task_name},
              {"scenario", to_string(scenario)},
              {"task_type", to_string(task_type)},
              {"dataset", {{"path", dataset.path}, {"format", dataset.format}, {"checksum", dataset.checksum}}},
              {"model", {{"adapter", model.adapter}, {"params", model.params}}},
              {"metrics", metrics},
              {"run", {{"seed", seed}}}};
}

BenchmarkSpec BenchmarkSpec::from_json(const json& obj) {
  auto violations = validate_spec(obj);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  BenchmarkSpec s;
  s.task_name = obj["task_name"].get<std::string>();
  s.scenario = *parse_scenario(obj["scenario"].get<std::string>());
  s.task_type = *parse_task_type(obj["task_type"].get<std::string>());
  s.dataset = {obj["dataset"]["path"].get<std::string>(), obj["dataset"]["format"].get<std::string>(),
               obj["dataset"]["checksum"].get<std::string>()};
  s.model.adapter = obj["model"]["adapter"].get<std::string>();
  s.model.params = obj["model"].value("params", json::object());
  s.metrics = obj["metrics"].get<std::vector<std::string>>();
  if (obj.contains("run")) s.seed = obj["run"].value("seed", std::uint64_t{0});
  return s;
}

std::string spec_id(const BenchmarkSpec& spec) { return sha256_hex(spec.to_json().dump()).substr(0, 16); }

// Catalog -----------------------------------------------------------------------

const std::vector<TaskEntry>& task_catalog() {
  static const std::vector<TaskEntry> catalog{
      {"Behavior Data Completion and Prediction", "Time Series", "Regression", "Enterprise Governance", "Data Flow",
       true},
      {"OSS Bot Identification and Classification", "Time Series", "Classification", "Software Development",
       "Data Flow", true},
      {"Community Sentiment Classification", "Text Data", "Classification", "Community Operations", "NLP", false},
      {"Software Supply Chain Risk Prediction", "Time Series", "Regression", "Ecosystem Strategy", "Complex Network",
       false},
      {"Project Influence Ranking", "Graph & Network", "Ranking", "Community Operations", "Complex Network", false},
      {"Archived Project Prediction", "Time Series", "Regression", "Enterprise Governance", "Web Mining", false},
      {"Network Metric Prediction", "Graph & Network", "Regression", "Enterprise Governance", "Data Flow", false},
      {"Community Anomalous Detection", "Time Series", "Anomaly Detection", "Enterprise Governance",
       "Complex Network", false},
      {"Project Recommendation", "Graph & Network", "Recommendation", "Community Operations", "Recommendation", true},
  };
  return catalog;
}

std::string catalog_json(std::span<const std::string> registered_ids) {
  json tasks = json::array();
  for (const auto& t : task_catalog()) {
    tasks.push_back({{"task", t.task},
                     {"data_type", t.data_type},
                     {"problem_type", t.problem_type},
                     {"scene", t.scene},
                     {"research_field", t.research_field},
                     {"implemented", t.implemented}});
  }
  return json{{"tasks", tasks}, {"specs", std::vector<std::string>(registered_ids.begin(), registered_ids.end())}}
             .dump(2) +
         "\n";
}

std::string checksum_of(const std::string& path) { return "sha256:" + sha256_file(path); }

// Registry ----------------------------------------------------------------------

Registry::Registry(fs::path root) : root_(std::move(root)) {}

bool Registry::contains(const std::string& id) const { return fs::exists(root_ / "specs" / (id + ".json")); }

std::string Registry::register_spec(const BenchmarkSpec& spec) {
  // Round-trip through validation so programmatic specs obey the same rules as files.
  const auto checked = BenchmarkSpec::from_json(spec.to_json());
  const std::string id = spec_id(checked);
  std::error_code ec;
  fs::create_directories(root_ / "specs", ec);
  if (ec) throw Error(Errc::IoError, "cannot create registry at " + root_.string());
  FileLock lock((root_ / ".lock").string());
  if (!contains(id)) write_file_atomic((root_ / "specs" / (id + ".json")).string(), checked.to_json().dump(2) + "\n");
  return id;
}

BenchmarkSpec Registry::load(const std::string& id) const {
  if (!contains(id)) throw Error(Errc::UnknownId, "no benchmark spec '" + id + "'");
  json obj;
  try {
    obj = json::parse(read_text_file((root_ / "specs" / (id + ".json")).string()));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, "spec " + id + ": " + e.what());
  }
  return BenchmarkSpec::from_json(obj);
}

std::vector<std::string> Registry::ids() const {
  std::vector<std::string> out;
  if (!fs::exists(root_ / "specs")) return out;
  for (const auto& entry : fs::directory_iterator(root_ / "specs")) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<json> Registry::runs(const std::string& id) const {
  if (!contains(id)) throw Error(Errc::UnknownId, "no benchmark spec '" + id + "'");
  std::vector<fs::path> files;
  const fs::path dir = root_ / "runs" / id;
  if (fs::exists(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
  }
  // Same-second runs carry a "-N" suffix; order by (stamp, N) so "-1" follows the bare stamp.
  auto key = [](const fs::path& p) {
    const auto stem = p.stem().string();
    const auto dash = stem.find('-');
    const long n = dash == std::string::npos ? 0 : std::strtol(stem.c_str() + dash + 1, nullptr, 10);
    return std::make_pair(stem.substr(0, dash), n);
  };
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) { return key(a) < key(b); });
  std::vector<json> out;
  for (const auto& f : files) out.push_back(json::parse(read_text_file(f.string())));
  return out;
}

std::string Registry::save_run(const RunResult& result) {
  const fs::path dir = root_ / "runs" / result.spec_id;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string());
  FileLock lock((root_ / ".lock").string());
  const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto c = to_civil(Timestamp{now.time_since_epoch()});
  char stamp[32];
  std::snprintf(stamp, sizeof stamp, "%04d%02d%02dT%02d%02d%02dZ", c.year, c.month, c.day, c.hour, c.minute, c.second);
  fs::path file = dir / (std::string(stamp) + ".json");
  for (int n = 1; fs::exists(file); ++n) file = dir / (std::string(stamp) + "-" + std::to_string(n) + ".json");
  RunResult stored = result;
  stored.artifacts.push_back(file.string());
  write_file_atomic(file.string(), stored.to_json().dump(2) + "\n");
  return file.string();
}

json RunResult::to_json() const {
  json metric_obj = json::object();
  for (const auto& [k, v] : metrics) metric_obj[k] = v ? json(*v) : json(nullptr);
  return json{{"spec_id", spec_id},       {"task_name", task_name}, {"metrics", metric_obj},
              {"wall_time_seconds", wall_time_seconds}, {"artifacts", artifacts}, {"seed", seed}};
}

// Running -----------------------------------------------------------------------

namespace {

template <typename T>
T param(const ModelRef& model, const char* key, T fallback) {
  if (!model.params.contains(key)) return fallback;
  try {
    return model.params.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::InvalidArgument, std::string("model.params.") + key + " has the wrong type");
  }
}

std::map<std::string, std::optional<double>> run_recommendation(const BenchmarkSpec& spec, const std::string& path) {
  const LinkAlgo algo = parse_link_algo(spec.model.adapter);
  const auto graph = load_edge_list(path);
  const auto split = split_edges(graph, param(spec.model, "test_fraction", 0.1), spec.seed);
  AucOptions opt;
  opt.n_comparisons = param<std::size_t>(spec.model, "n_comparisons", 10000);
  opt.seed = spec.seed;
  opt.threads = param(spec.model, "threads", 1u);
  opt.dataset = spec.task_name;
  const auto report = evaluate_auc(split, algo, opt);
  return {{"auc", report.auc}, {"wall_time", report.wall_time_seconds}};
}

std::map<std::string, std::optional<double>> run_regression(const BenchmarkSpec& spec, const std::string& path) {
  const auto method = ImputeMethod::parse(spec.model.adapter);
  const auto matrix = load_metric_matrix(path);
  const auto mode_name = param<std::string>(spec.model, "mask_mode", "random");
  if (mode_name != "random" && mode_name != "tail") {
    throw Error(Errc::InvalidArgument, "model.params.mask_mode must be random or tail");
  }
  const auto masked = apply_mask(matrix, param(spec.model, "mask_fraction", 0.2), spec.seed,
                                 mode_name == "tail" ? MaskMode::BlockTail : MaskMode::Random);
  const auto filled = impute(masked.masked, method);
  const auto score = evaluate_completion(masked.heldout, filled.matrix);
  return {{"nmse", score.nmse}, {"nrmse", score.nrmse}, {"nmae", score.nmae}};
}

std::map<std::string, std::optional<double>> run_classification(const BenchmarkSpec& spec, const std::string& path) {
  if (to_lower(spec.model.adapter) != "logistic") {
    throw Error(Errc::AdapterMissing, "classification adapter '" + spec.model.adapter + "' is not registered");
  }
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  auto rows = read_features_csv(in);
  const double test_fraction = param(spec.model, "test_fraction", 0.3);
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "model.params.test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(spec.seed);
  for (std::size_t i = rows.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::size_t n_test = fraction_count(test_fraction, rows.size());
  std::vector<AccountFeatures> train, test;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_test ? test : train).push_back(rows[order[i]]);

  const auto model = train_classifier(train, param(spec.model, "epochs", 500), param(spec.model, "learning_rate", 0.1),
                                      spec.seed);
  const auto r = eval_classification(model, test);
  return {{"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}, {"auc", r.auc}};
}

}  // namespace

RunResult run_benchmark(Registry& registry, const std::string& id, const fs::path& data_dir) {
  const BenchmarkSpec spec = registry.load(id);
  for (const auto& entry : task_catalog()) {
    if (entry.task == spec.task_name && !entry.implemented) {
      throw Error(Errc::TaskNotImplemented, "'" + spec.task_name + "' is a catalog entry without a harness");
    }
  }
  const fs::path dataset = fs::path(spec.dataset.path).is_absolute() ? fs::path(spec.dataset.path)
                                                                      : data_dir / spec.dataset.path;
  const std::string expected = spec.dataset.checksum.rfind("sha256:", 0) == 0 ? spec.dataset.checksum
                                                                               : "sha256:" + spec.dataset.checksum;
  if (checksum_of(dataset.string()) != expected) {
    throw Error(Errc::ChecksumMismatch, dataset.string() + " does not match " + expected);
  }

  const auto start = std::chrono::steady_clock::now();
  std::map<std::string, std::optional<double>> all;
  try {
    switch (spec.task_type) {
      case TaskType::Recommendation: all = run_recommendation(spec, dataset.string()); break;
      case TaskType::Regression: all = run_regression(spec, dataset.string()); break;
      case TaskType::Classification: all = run_classification(spec, dataset.string()); break;
      default:
        throw Error(Errc::AdapterMissing, "no harness for task type " + std::string(to_string(spec.task_type)));
    }
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidArgument && spec.task_type != TaskType::Classification) {
      // Unknown algorithm or method names surface as missing adapters.
      const std::string what = e.what();
      if (what.find("unknown") != std::string::npos) {
        throw Error(Errc::AdapterMissing, "spec " + id + ": " + what);
      }
    }
    throw Error(e.code(), "spec " + id + " (" + spec.task_name + "): " + e.what());
  }
  RunResult result;
  result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.spec_id = id;
  result.task_name = spec.task_name;
  result.seed = spec.seed;
  for (const auto& m : spec.metrics) {
    auto it = all.find(m);
    result.metrics[m] = it == all.end() ? std::nullopt : it->second;
  }
  result.artifacts.push_back(registry.save_run(result));
  return result;
}

// Leaderboards ------------------------------------------------------------------

Leaderboard build_leaderboard(std::span<const std::pair<std::string, double>> results, std::string index_name,
                              std::string context) {
  std::vector<std::pair<std::string, double>> sorted(results.begin(), results.end());
  for (const auto& [entity, value] : sorted) {
    if (!std::isfinite(value)) throw Error(Errc::InvalidArgument, "leaderboard value for '" + entity + "' is not finite");
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Leaderboard board{std::move(index_name), std::move(context), {}};
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const std::size_t rank = i > 0 && sorted[i].second == sorted[i - 1].second ? board.entries.back().rank : i + 1;
    board.entries.push_back({rank, sorted[i].first, sorted[i].second});
  }
  return board;
}

Leaderboard top_n(Leaderboard board, std::size_t n) {
  if (board.entries.size() > n) board.entries.resize(n);
  return board;
}

ExportFormat parse_export_format(std::string_view text) {
  const auto t = to_lower(text);
  if (t == "json") return ExportFormat::Json;
  if (t == "csv") return ExportFormat::Csv;
  if (t == "html") return ExportFormat::Html;
  throw Error(Errc::InvalidArgument, "unknown export format '" + std::string(text) + "'");
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> parse_csv_row(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string export_leaderboard(const Leaderboard& board, ExportFormat format) {
  switch (format) {
    case ExportFormat::Json: {
      json entries = json::array();
      for (const auto& e : board.entries) entries.push_back({{"rank", e.rank}, {"entity", e.entity}, {"value", e.value}});
      return json{{"index_name", board.index_name}, {"context", board.context}, {"entries", entries}}.dump(2) + "\n";
    }
    case ExportFormat::Csv: {
      std::string out = "rank,entity,value\n";
      for (const auto& e : board.entries) {
        out += std::to_string(e.rank) + "," + csv_field(e.entity) + "," + format_double(e.value) + "\n";
      }
      return out;
    }
    case ExportFormat::Html: {
      std::string out =
          "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>" + html_escape(board.index_name) +
          "</title></head>\n<body>\n<h1>" + html_escape(board.index_name) + "</h1>\n<p>" + html_escape(board.context) +
          "</p>\n<table>\n<thead><tr><th>Rank</th><th>Entity</th><th>Value</th></tr></thead>\n<tbody>\n";
      for (const auto& e : board.entries) {
        out += "<tr><td>" + std::to_string(e.rank) + "</td><td>" + html_escape(e.entity) + "</td><td>" +
               format_double(e.value) + "</td></tr>\n";
      }
      return out + "</tbody>\n</table>\n</body>\n</html>\n";
    }
  }
  return {};
}

Leaderboard parse_leaderboard_json(std::string_view text) {
  try {
    const auto obj = json::parse(text);
    Leaderboard board{obj.at("index_name").get<std::string>(), obj.at("context").get<std::string>(), {}};
    for (const auto& e : obj.at("entries")) {
      board.entries.push_back({e.at("rank").get<std::size_t>(), e.at("entity").get<std::string>(),
                               e.at("value").get<double>()});
    }
    return board;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("bad leaderboard JSON: ") + e.what());
  }
}

Leaderboard parse_leaderboard_csv(std::string_view text) {
  Leaderboard board;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "rank,entity,value") throw Error(Errc::ParseError, "leaderboard CSV header must be rank,entity,value");
      continue;
    }
    const auto f = parse_csv_row(line);
    if (f.size() != 3) throw Error(Errc::ParseError, "leaderboard rows need three fields");
    board.entries.push_back({static_cast<std::size_t>(parse_double(f[0])), f[1], parse_double(f[2])});
  }
  return board;
}

}  // namespace ecoperf
