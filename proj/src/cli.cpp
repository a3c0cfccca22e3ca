#include "ecoperf/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecoperf/bench.hpp"
#include "ecoperf/botdetect.hpp"
#include "ecoperf/collab_graph.hpp"
#include "ecoperf/event_store.hpp"
#include "ecoperf/indices.hpp"
#include "ecoperf/linkpred.hpp"
#include "ecoperf/queries.hpp"
#include "ecoperf/service.hpp"
#include "ecoperf/tseries.hpp"

namespace ecoperf {

namespace fs = std::filesystem;
using nlohmann::json;

GlobalConfig GlobalConfig::load(const fs::path& path) {
  json obj;
  try {
    obj = json::parse(read_text_file(path.string()));
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, "config " + path.string() + ": " + e.what());
  }
  if (!obj.is_object()) throw Error(Errc::InvalidArgument, "config " + path.string() + " must be a JSON object");
  const fs::path base = path.parent_path();
  auto resolve = [&](const json& v, const char* key) {
    if (!v.is_string()) throw Error(Errc::InvalidArgument, std::string("config key '") + key + "' must be a string");
    fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  GlobalConfig c;
  for (const auto& [key, value] : obj.items()) {
    if (key == "store") {
      c.store = resolve(value, "store");
    } else if (key == "registry") {
      c.registry = resolve(value, "registry");
    } else if (key == "weights") {
      c.weights = resolve(value, "weights");
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw Error(Errc::InvalidArgument, "config key 'seed' must be a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "verbosity") {
      if (!value.is_string()) throw Error(Errc::InvalidArgument, "config key 'verbosity' must be a string");
      c.verbosity = value.get<std::string>();
      if (c.verbosity != "quiet" && c.verbosity != "info" && c.verbosity != "debug") {
        throw Error(Errc::InvalidArgument, "verbosity must be quiet, info or debug");
      }
    } else {
      throw Error(Errc::InvalidArgument, "unknown config key '" + key + "'");
    }
  }
  for (const auto* dir : {&c.store, &c.registry}) {
    if (*dir && fs::exists(**dir) && !fs::is_directory(**dir)) {
      throw Error(Errc::InvalidArgument, (*dir)->string() + " is not a directory");
    }
  }
  if (c.weights) EventWeightConfig::load(c.weights->string());
  return c;
}

namespace {

struct UsageError : std::runtime_error {
  UsageError(const std::string& what, std::string remedy) : std::runtime_error(what), remedy(std::move(remedy)) {}
  std::string remedy;
};

struct Context {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  std::string out_path;
  std::string config_path;
  int verbose = 0;
  GlobalConfig config;

  void emit(const std::string& content) const {
    if (out_path.empty()) {
      out << content;
    } else {
      write_file_atomic(out_path, content);
    }
  }
  void note(const std::string& message) const {
    const int level = std::max(verbose, config.verbosity == "debug" ? 2 : config.verbosity == "info" ? 1 : 0);
    if (level >= 1) err << "ecoperf: " << message << "\n";
  }

  fs::path store(const std::string& flag) const {
    if (!flag.empty()) return flag;
    if (config.store) return *config.store;
    throw UsageError("no event store given", "pass --store DIR or set \"store\" in the config file");
  }
  fs::path registry(const std::string& flag) const {
    if (!flag.empty()) return flag;
    if (config.registry) return *config.registry;
    throw UsageError("no registry given", "pass --registry DIR or set \"registry\" in the config file");
  }
  EventWeightConfig weights(const std::string& flag) const {
    if (!flag.empty()) return EventWeightConfig::load(flag);
    if (config.weights) return EventWeightConfig::load(config.weights->string());
    return EventWeightConfig::defaults();
  }
  std::uint64_t seed(const CLI::Option* opt, std::uint64_t value) const {
    if (opt->count() > 0) return value;
    if (config.seed) return *config.seed;
    throw UsageError("this command is randomized and needs a seed", "pass --seed N or set \"seed\" in the config file");
  }
};

std::vector<std::string> list_arg(const std::string& inline_list, const std::string& file) {
  std::vector<std::string> out;
  for (const auto& item : split(inline_list, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  if (!file.empty()) {
    std::istringstream in(read_text_file(file));
    std::string line;
    while (std::getline(in, line)) {
      auto t = trim(line);
      if (!t.empty()) out.emplace_back(t);
    }
  }
  return out;
}

MonthRange month_range(const EventStore& store, const std::string& month, const std::string& from,
                       const std::string& to) {
  if (!month.empty()) {
    if (!from.empty() || !to.empty()) throw UsageError("--month conflicts with --from/--to", "give either --month or a range");
    const Month m = Month::parse(month);
    return {m, m};
  }
  const auto& parts = store.manifest().partitions;
  if ((from.empty() || to.empty()) && parts.empty()) throw Error(Errc::UnknownId, "store is empty");
  return {from.empty() ? parts.front().month : Month::parse(from), to.empty() ? parts.back().month : Month::parse(to)};
}

std::string read_input(const Context& ctx, const std::string& path) {
  if (path.empty() || path == "-") {
    std::ostringstream ss;
    ss << ctx.in.rdbuf();
    return ss.str();
  }
  return read_text_file(path);
}

std::string ingest_report_json(const IngestReport& r) {
  json rejects = json::array();
  for (const auto& rej : r.rejects) rejects.push_back({{"line", rej.line}, {"reason", rej.reason}});
  return json{{"accepted", r.accepted},
              {"rejected", r.rejected},
              {"duplicates", r.duplicates},
              {"per_month_counts", r.per_month_counts},
              {"rejects", rejects}}
             .dump(2) +
         "\n";
}

std::string edge_list_text(const CollabGraph& g) {
  std::ostringstream ss;
  write_edge_list(g, ss);
  return ss.str();
}

std::string matrix_text(const MetricMatrix& m) {
  std::ostringstream ss;
  write_metric_matrix(m, ss);
  return ss.str();
}

std::vector<AccountFeatures> load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  return read_features_csv(in);
}

using Action = std::function<void()>;

class Commands {
 public:
  Commands(CLI::App& app, Context& ctx) : app_(app), ctx_(ctx) {}

  void add_all() {
    add_ingest();
    add_graph();
    add_index();
    add_linkpred();
    add_ts();
    add_bot();
    add_bench();
    add_serve();
  }

  void run() const {
    for (const auto& [sub, action] : actions_) {
      if (sub->parsed()) {
        action();
        return;
      }
    }
  }

 private:
  CLI::App* leaf(CLI::App* parent, const std::string& name, const std::string& about, Action action) {
    auto* sub = parent->add_subcommand(name, about);
    actions_.emplace_back(sub, std::move(action));
    return sub;
  }
  CLI::App* group(const std::string& name, const std::string& about) {
    auto* sub = app_.add_subcommand(name, about);
    sub->require_subcommand(1);
    return sub;
  }

  void add_ingest() {
    auto* sub = leaf(&app_, "ingest", "Append NDJSON events to the monthly store", [this] {
      const auto text = read_input(ctx_, o_.input);
      std::istringstream in(text);
      const auto report = ingest_stream(in, ctx_.store(o_.store));
      ctx_.note(std::to_string(report.accepted) + " accepted, " + std::to_string(report.rejected) + " rejected");
      ctx_.emit(ingest_report_json(report));
    });
    sub->add_option("--store", o_.store, "Event store directory");
    sub->add_option("--input,-i", o_.input, "NDJSON file, or - for stdin")->default_str("-");
  }

  void add_graph() {
    auto* g = group("graph", "Build and transform collaboration graphs");
    auto* build = leaf(g, "build", "Developer-repo graph from stored events", [this] {
      const auto store = EventStore::open(ctx_.store(o_.store));
      const auto range = month_range(store, o_.month, o_.from, o_.to);
      const auto events = query_events(store, {}, range);
      ctx_.emit(edge_list_text(build_bipartite(events, ctx_.weights(o_.weights))));
    });
    store_range_options(build);
    build->add_option("--weights", o_.weights, "Event weight config (JSON)");

    auto* project = leaf(g, "project", "Repo-relation projection of a bipartite graph", [this] {
      const auto rule = o_.rule == "product" ? ProjectionRule::Product : ProjectionRule::MinShared;
      ctx_.emit(edge_list_text(project_repo_relation(load_edge_list(o_.graph), rule)));
    });
    project->add_option("--graph", o_.graph, "Bipartite edge list")->required();
    project->add_option("--rule", o_.rule, "Edge weight rule")->check(CLI::IsMember({"min", "product"}))->default_str("min");

    auto* topic = leaf(g, "topic", "Repo-topic graph from a topics CSV", [this] {
      std::ifstream in(o_.topics);
      if (!in) throw Error(Errc::IoError, "cannot read " + o_.topics);
      ctx_.emit(edge_list_text(build_repo_topic(read_repo_topics(in))));
    });
    topic->add_option("--topics", o_.topics, "CSV repo_name,tag1;tag2")->required();

    auto* merge = leaf(g, "merge", "Blend a relation graph with a topic graph", [this] {
      ctx_.emit(edge_list_text(merge_relation_topic(load_edge_list(o_.relation), load_edge_list(o_.topic), o_.alpha)));
    });
    merge->add_option("--relation", o_.relation, "Repo-relation edge list")->required();
    merge->add_option("--topic", o_.topic, "Repo-topic edge list")->required();
    merge->add_option("--alpha", o_.alpha, "Weight of the relation graph")->check(CLI::Range(0.0, 1.0))->default_str("0.5");
  }

  void add_index() {
    auto* g = group("index", "Compute activity and influence indices for one month");
    for (const char* name : {"activity", "openrank", "pagerank", "degree"}) {
      auto* sub = leaf(g, name, std::string("Compute ") + name + " per entity", [this, name] {
        const auto results = query_index(EventStore::open(ctx_.store(o_.store)), ctx_.weights(o_.weights),
                                         index_query(parse_index_name(name)));
        ctx_.emit(o_.format == "csv" ? index_results_csv(results) : index_results_json(results));
      });
      index_options(sub);
      sub->add_option("--format", o_.format)->check(CLI::IsMember({"json", "csv"}))->default_str("json");
      sub->add_option("--scale", o_.scale, "Multiply values for display")->default_str("1");
      sub->add_option("--entities", o_.entities, "Which nodes to report")
          ->check(CLI::IsMember({"repos", "devs", "all"}))
          ->default_str("repos");
    }
  }

  void add_linkpred() {
    auto* g = group("linkpred", "Link-prediction splits and AUC evaluation");
    auto* split_cmd = leaf(g, "split", "Hold out a random fraction of edges", [this] {
      const auto seed = ctx_.seed(seed_opt_, o_.seed);
      const auto graph = load_edge_list(o_.graph);
      const auto split = split_edges(graph, o_.test_fraction, seed);
      save_edge_list(split.train, o_.train_out);
      GraphBuilder test(graph.kind());
      for (const auto& e : split.test_edges) {
        test.add_weight(test.add_node(graph.name(e.u), graph.node_kind(e.u)),
                        test.add_node(graph.name(e.v), graph.node_kind(e.v)), e.weight);
      }
      save_edge_list(std::move(test).build(), o_.test_out);
      ctx_.emit(json{{"seed", seed},
                     {"test_fraction", o_.test_fraction},
                     {"train_edges", split.train.edge_count()},
                     {"test_edges", split.test_edges.size()},
                     {"train", o_.train_out},
                     {"test", o_.test_out}}
                    .dump(2) +
                "\n");
    });
    split_cmd->add_option("--graph", o_.graph, "Edge list")->required();
    split_cmd->add_option("--test-fraction", o_.test_fraction)->check(CLI::Range(0.0, 1.0))->default_str("0.1");
    seed_opt_ = split_cmd->add_option("--seed", o_.seed, "RNG seed");
    split_cmd->add_option("--train-out", o_.train_out, "Where to write the training graph")->required();
    split_cmd->add_option("--test-out", o_.test_out, "Where to write the held-out edges")->required();

    auto* eval = leaf(g, "eval", "Sampled AUC of a similarity index", [this] {
      const auto seed = ctx_.seed(eval_seed_opt_, o_.seed);
      const auto graph = load_edge_list(o_.graph);
      const auto algo = parse_link_algo(o_.algo);
      const auto split = split_edges(graph, o_.test_fraction, seed);
      AucOptions opt;
      opt.n_comparisons = o_.n;
      opt.seed = seed;
      opt.threads = o_.threads;
      opt.dataset = o_.dataset.empty() ? fs::path(o_.graph).stem().string() : o_.dataset;
      const auto report = evaluate_auc(split, algo, opt);
      ctx_.emit(o_.format == "csv" ? report.to_csv() : report.to_json());
    });
    eval->add_option("--graph", o_.graph, "Edge list")->required();
    eval->add_option("--algo", o_.algo, "cn, ra, wra, ira or wicra")->default_str("ra");
    eval->add_option("--test-fraction", o_.test_fraction)->check(CLI::Range(0.0, 1.0))->default_str("0.1");
    eval_seed_opt_ = eval->add_option("--seed", o_.seed, "RNG seed");
    eval->add_option("--n", o_.n, "Number of sampled comparisons")->check(CLI::PositiveNumber)->default_str("10000");
    eval->add_option("--threads", o_.threads)->check(CLI::PositiveNumber)->default_str("1");
    eval->add_option("--dataset", o_.dataset, "Dataset label in the report (default: graph file stem)");
    eval->add_option("--format", o_.format)->check(CLI::IsMember({"json", "csv"}))->default_str("json");
  }

  void add_ts() {
    auto* g = group("ts", "Repo-month metric matrices: build, mask, impute, evaluate, detect anomalies");
    auto* build = leaf(g, "build", "Metric matrix from stored events", [this] {
      const auto store = EventStore::open(ctx_.store(o_.store));
      const auto range = month_range(store, o_.month, o_.from, o_.to);
      auto repos = list_arg(o_.repos, o_.repos_file);
      if (repos.empty()) {
        std::set<std::string> seen;
        for (const auto& e : query_events(store, {}, range)) seen.insert(e.repo_name);
        repos.assign(seen.begin(), seen.end());
      }
      MetricKind metric;
      metric.kind = o_.metric == "participants" ? MetricKind::Participants
                    : o_.metric == "activity"   ? MetricKind::WeightedActivity
                                                : MetricKind::EventCount;
      metric.weights = ctx_.weights(o_.weights);
      ctx_.emit(matrix_text(build_metric_matrix(store, repos, range, metric)));
    });
    store_range_options(build);
    build->add_option("--repos", o_.repos, "Comma-separated repo names (default: every repo in range)");
    build->add_option("--repos-file", o_.repos_file, "One repo name per line");
    build->add_option("--metric", o_.metric)
        ->check(CLI::IsMember({"events", "participants", "activity"}))
        ->default_str("events");
    build->add_option("--weights", o_.weights, "Event weight config for --metric activity");

    auto* mask = leaf(g, "mask", "Hide observed cells for evaluation", [this] {
      const auto seed = ctx_.seed(mask_seed_opt_, o_.seed);
      const auto m = load_metric_matrix(o_.matrix);
      const auto masked = apply_mask(m, o_.fraction, seed, o_.mode == "tail" ? MaskMode::BlockTail : MaskMode::Random);
      save_metric_matrix(masked.masked, o_.masked_out);
      std::ostringstream held;
      write_heldout(m, masked.heldout, held);
      write_file_atomic(o_.heldout, held.str());
      ctx_.emit(json{{"seed", seed},
                     {"fraction", o_.fraction},
                     {"mode", o_.mode},
                     {"heldout_cells", masked.heldout.size()},
                     {"masked", o_.masked_out},
                     {"heldout", o_.heldout}}
                    .dump(2) +
                "\n");
    });
    mask->add_option("--matrix", o_.matrix, "Metric matrix CSV")->required();
    mask->add_option("--fraction", o_.fraction)->check(CLI::Range(0.0, 1.0))->default_str("0.2");
    mask_seed_opt_ = mask->add_option("--seed", o_.seed, "RNG seed");
    mask->add_option("--mode", o_.mode)->check(CLI::IsMember({"random", "tail"}))->default_str("random");
    mask->add_option("--masked-out", o_.masked_out, "Where to write the masked matrix")->required();
    mask->add_option("--heldout", o_.heldout, "Where to write the held-out cells")->required();

    auto* imp = leaf(g, "impute", "Fill unobserved cells", [this] {
      const auto result = impute(load_metric_matrix(o_.matrix), ImputeMethod::parse(o_.method));
      for (auto row : result.flagged_rows) ctx_.note("row " + result.matrix.repos[row] + " had no data; filled with 0");
      ctx_.emit(matrix_text(result.matrix));
    });
    imp->add_option("--matrix", o_.matrix, "Masked metric matrix CSV")->required();
    imp->add_option("--method", o_.method, "mean, linear, seasonal[:period] or knn[:k]")->default_str("linear");

    auto* eval = leaf(g, "eval", "Score a completed matrix on held-out cells", [this] {
      const auto m = load_metric_matrix(o_.matrix);
      std::ifstream in(o_.heldout);
      if (!in) throw Error(Errc::IoError, "cannot read " + o_.heldout);
      ctx_.emit(completion_score_json(evaluate_completion(read_heldout(m, in), m)));
    });
    eval->add_option("--matrix", o_.matrix, "Completed metric matrix CSV")->required();
    eval->add_option("--heldout", o_.heldout, "Held-out cells CSV")->required();

    auto* anomaly = leaf(g, "anomaly", "Sliding-window robust z-score detection per repo", [this] {
      ctx_.emit(anomalies_jsonl(detect_anomalies(load_metric_matrix(o_.matrix), o_.window, o_.threshold)));
    });
    anomaly->add_option("--matrix", o_.matrix, "Metric matrix CSV")->required();
    anomaly->add_option("--window", o_.window)->default_str("12");
    anomaly->add_option("--threshold", o_.threshold)->default_str("3.5");
  }

  void add_bot() {
    auto* g = group("bot", "Bot account features, training and evaluation");
    auto* features = leaf(g, "features", "Behavioral features per account", [this] {
      const auto store = EventStore::open(ctx_.store(o_.store));
      const auto range = month_range(store, o_.month, o_.from, o_.to);
      std::map<std::string, AccountLabel> labels;
      if (!o_.labels.empty()) {
        std::ifstream in(o_.labels);
        if (!in) throw Error(Errc::IoError, "cannot read " + o_.labels);
        for (auto& [login, label] : read_labels_csv(in)) labels[login] = label;
      }
      auto logins = list_arg(o_.logins, o_.logins_file);
      if (logins.empty() && !labels.empty()) {
        for (const auto& [login, _] : labels) logins.push_back(login);
      }
      if (logins.empty()) {
        // Inferred accounts need more than --min-events events to say anything about behavior.
        std::map<std::string, std::size_t> seen;
        for (const auto& e : query_events(store, {}, range)) ++seen[e.actor_login];
        for (const auto& [login, count] : seen) {
          if (count > o_.min_events) logins.push_back(login);
        }
      }
      auto rows = extract_features(store, logins, range);
      for (auto& row : rows) {
        if (auto it = labels.find(row.actor_login); it != labels.end()) row.label = it->second;
      }
      std::ostringstream ss;
      write_features_csv(rows, ss);
      ctx_.emit(ss.str());
    });
    store_range_options(features);
    features->add_option("--logins", o_.logins, "Comma-separated accounts (default: labeled or all accounts)");
    features->add_option("--logins-file", o_.logins_file, "One account per line");
    features->add_option("--labels", o_.labels, "CSV actor_login,label to attach");
    features->add_option("--min-events", o_.min_events, "Inferred accounts need more events than this")
        ->default_str("10");

    auto* train = leaf(g, "train", "Fit the logistic baseline", [this] {
      const auto seed = ctx_.seed(bot_seed_opt_, o_.seed);
      ctx_.emit(train_classifier(load_features(o_.features), o_.epochs, o_.lr, seed).to_json());
    });
    train->add_option("--features", o_.features, "Labeled features CSV")->required();
    train->add_option("--epochs", o_.epochs)->check(CLI::PositiveNumber)->default_str("500");
    train->add_option("--lr", o_.lr, "Learning rate")->check(CLI::PositiveNumber)->default_str("0.1");
    bot_seed_opt_ = train->add_option("--seed", o_.seed, "RNG seed");

    auto* eval = leaf(g, "eval", "Confusion metrics and AUC", [this] {
      const auto model = ClassifierModel::from_json(read_text_file(o_.model));
      const auto report = eval_classification(model, load_features(o_.features));
      ctx_.emit(report.to_json());
      if (!report.auc) throw Error(Errc::SingleClass, "evaluation data holds a single class; AUC is undefined");
    });
    eval->add_option("--model", o_.model, "Model JSON from bot train")->required();
    eval->add_option("--features", o_.features, "Labeled features CSV")->required();
  }

  void add_bench() {
    auto* g = group("bench", "Benchmark registry, runs and leaderboards");
    auto* reg = leaf(g, "register", "Validate and store a benchmark spec", [this] {
      json obj;
      try {
        obj = json::parse(read_text_file(o_.spec));
      } catch (const json::exception& e) {
        throw Error(Errc::ParseError, o_.spec + ": " + e.what());
      }
      Registry registry(ctx_.registry(o_.registry));
      const auto id = registry.register_spec(BenchmarkSpec::from_json(obj));
      ctx_.emit(json{{"id", id}}.dump(2) + "\n");
    });
    registry_option(reg);
    reg->add_option("--spec", o_.spec, "Spec JSON file")->required();

    auto* run = leaf(g, "run", "Run a registered benchmark and store the result", [this] {
      Registry registry(ctx_.registry(o_.registry));
      ctx_.emit(run_benchmark(registry, o_.id, o_.data_dir).to_json().dump(2) + "\n");
    });
    registry_option(run);
    run->add_option("--id", o_.id, "Spec id")->required();
    run->add_option("--data-dir", o_.data_dir, "Base for relative dataset paths")->default_str(".");

    auto* list = leaf(g, "list", "Task catalog and registered spec ids", [this] {
      ctx_.emit(benchmarks_json(Registry(ctx_.registry(o_.registry))));
    });
    registry_option(list);

    auto* runs = leaf(g, "runs", "Stored runs of one spec", [this] {
      ctx_.emit(runs_json(Registry(ctx_.registry(o_.registry)), o_.id));
    });
    registry_option(runs);
    runs->add_option("--id", o_.id, "Spec id")->required();

    auto* board = leaf(g, "leaderboard", "Ranked index values for one month", [this] {
      const auto b = query_leaderboard(EventStore::open(ctx_.store(o_.store)), ctx_.weights(o_.weights),
                                       index_query(parse_index_name(o_.index)));
      ctx_.emit(export_leaderboard(b, parse_export_format(o_.format)));
    });
    index_options(board);
    board->add_option("--index", o_.index, "activity, openrank, pagerank or degree")->required();
    board->add_option("--format", o_.format)->check(CLI::IsMember({"json", "csv", "html"}))->default_str("json");

    auto* exp = leaf(g, "export", "Convert an exported leaderboard, optionally cut to the top N", [this] {
      const auto text = read_input(ctx_, o_.input);
      const bool csv = o_.input.size() > 4 && o_.input.substr(o_.input.size() - 4) == ".csv";
      auto b = csv ? parse_leaderboard_csv(text) : parse_leaderboard_json(text);
      if (o_.top) b = top_n(std::move(b), *o_.top);
      ctx_.emit(export_leaderboard(b, parse_export_format(o_.format)));
    });
    exp->add_option("--input,-i", o_.input, "Leaderboard JSON or CSV file, or - for stdin")->required();
    exp->add_option("--top", o_.top, "Keep the first N entries")->check(CLI::PositiveNumber);
    exp->add_option("--format", o_.format)->check(CLI::IsMember({"json", "csv", "html"}))->default_str("json");

    auto* sum = leaf(g, "checksum", "Dataset checksum in spec form", [this] { ctx_.emit(checksum_of(o_.input) + "\n"); });
    sum->add_option("--file", o_.input, "Dataset file")->required();
  }

  void add_serve() {
    auto* sub = leaf(&app_, "serve", "Read-only HTTP service over the store and registry", [this] {
      ServiceConfig cfg{ctx_.store(o_.store), ctx_.registry(o_.registry), ctx_.weights(o_.weights)};
      Service service(std::move(cfg));
      const int port = service.bind(o_.host, o_.port);
      if (port <= 0) throw Error(Errc::IoError, "cannot bind " + o_.host + ":" + std::to_string(o_.port));
      ctx_.err << "ecoperf: serving on http://" << o_.host << ":" << port << "\n";
      ctx_.err.flush();
      service.serve();
    });
    sub->add_option("--store", o_.store, "Event store directory");
    registry_option(sub);
    sub->add_option("--weights", o_.weights, "Event weight config (JSON)");
    sub->add_option("--host", o_.host)->default_str("127.0.0.1");
    sub->add_option("--port", o_.port)->check(CLI::Range(0, 65535))->default_str("8080");
  }

  void store_range_options(CLI::App* sub) {
    sub->add_option("--store", o_.store, "Event store directory");
    sub->add_option("--month", o_.month, "Single month YYYY-MM");
    sub->add_option("--from", o_.from, "First month YYYY-MM (default: earliest stored)");
    sub->add_option("--to", o_.to, "Last month YYYY-MM (default: latest stored)");
  }

  void registry_option(CLI::App* sub) { sub->add_option("--registry", o_.registry, "Benchmark registry directory"); }

  void index_options(CLI::App* sub) {
    sub->add_option("--store", o_.store, "Event store directory");
    sub->add_option("--month", o_.month, "Month YYYY-MM (default: latest stored)");
    sub->add_option("--weights", o_.weights, "Event weight config (JSON)");
    sub->add_option("--top", o_.top, "Keep the first N entries")->check(CLI::PositiveNumber);
    sub->add_option("--threads", o_.threads)->check(CLI::PositiveNumber)->default_str("1");
  }

  IndexQuery index_query(IndexName index) const {
    IndexQuery q;
    q.index = index;
    if (!o_.month.empty()) q.month = Month::parse(o_.month);
    q.entities = o_.entities == "devs" ? EntityFilter::Devs : o_.entities == "all" ? EntityFilter::All : EntityFilter::Repos;
    if (index == IndexName::OpenActivity && q.entities != EntityFilter::Repos) {
      throw UsageError("activity is a per-repo index", "drop --entities or use openrank, pagerank or degree");
    }
    q.scale = o_.scale;
    q.threads = o_.threads;
    q.top = o_.top;
    return q;
  }

  struct Options {
    std::string store, registry, weights, input = "-", month, from, to;
    std::string graph, rule = "min", topics, relation, topic, train_out, test_out, algo = "ra", dataset;
    std::string format = "json", entities = "repos", index;
    std::string repos, repos_file, metric = "events", matrix, masked_out, heldout, mode = "random", method = "linear";
    std::string logins, logins_file, labels, features, model;
    std::string spec, id, data_dir = ".", host = "127.0.0.1";
    double alpha = 0.5, scale = 1.0, test_fraction = 0.1, fraction = 0.2, threshold = 3.5, lr = 0.1;
    std::uint64_t seed = 0;
    std::size_t n = 10000, window = 12, min_events = 10;
    std::optional<std::size_t> top;
    unsigned threads = 1;
    int epochs = 500, port = 8080;
  };

  CLI::App& app_;
  Context& ctx_;
  Options o_;
  std::vector<std::pair<CLI::App*, Action>> actions_;
  CLI::Option* seed_opt_ = nullptr;
  CLI::Option* eval_seed_opt_ = nullptr;
  CLI::Option* mask_seed_opt_ = nullptr;
  CLI::Option* bot_seed_opt_ = nullptr;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Context ctx{in, out, err, {}, {}, 0, {}};
  CLI::App app{"Open-source ecosystem benchmarking: event store, graphs, indices, benchmark harnesses", "ecoperf"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--out,-o", ctx.out_path, "Write the result here instead of stdout");
  app.add_option("--config", ctx.config_path, "GlobalConfig JSON file")->envname("ECOPERF_CONFIG");
  app.add_flag("-v,--verbose", ctx.verbose, "Progress notes on stderr (repeat for more)");

  Commands commands(app, ctx);
  commands.add_all();

  std::vector<const char*> argv{"ecoperf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "ecoperf: " << e.what() << "\n";
    err << "Run 'ecoperf --help' (or 'ecoperf <command> --help') for usage.\n";
    return 2;
  }

  try {
    if (!ctx.config_path.empty()) {
      try {
        ctx.config = GlobalConfig::load(ctx.config_path);
      } catch (const Error& e) {
        throw UsageError(e.what(), "fix the config file or point --config / ECOPERF_CONFIG elsewhere");
      }
    }
    commands.run();
    return 0;
  } catch (const UsageError& e) {
    err << "ecoperf: " << e.what() << "\n" << "Remedy: " << e.remedy << ".\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "ecoperf: spec is invalid\n";
    for (const auto& v : e.violations()) err << "  " << v << "\n";
    return 1;
  } catch (const Error& e) {
    err << "ecoperf: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "ecoperf: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cin, std::cout, std::cerr);
}

}  // namespace ecoperf
