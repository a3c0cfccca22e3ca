#include <doctest.h>

#include <fstream>

#include "ecoperf/bench.hpp"
#include "ecoperf/botdetect.hpp"
#include "ecoperf/collab_graph.hpp"
#include "fixture.hpp"

using namespace ecoperf;
using nlohmann::json;

namespace {

json valid_spec_json() {
  return json{{"task_name", "Project Recommendation"},
              {"scenario", "CommunityOperations"},
              {"task_type", "Recommendation"},
              {"dataset", {{"path", "graph.tsv"}, {"format", "edgelist"}, {"checksum", "sha256:00"}}},
              {"model", {{"adapter", "RA"}, {"params", json::object()}}},
              {"metrics", {"auc"}},
              {"run", {{"seed", 42}}}};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

BenchmarkSpec spec_for(const std::filesystem::path& file, json spec) {
  spec["dataset"]["checksum"] = checksum_of(file.string());
  return BenchmarkSpec::from_json(spec);
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("enum names round-trip") {
    for (auto s : {Scenario::EnterpriseGovernance, Scenario::SoftwareDevelopment, Scenario::CommunityOperations,
                   Scenario::EcosystemStrategy}) {
      CHECK(parse_scenario(to_string(s)) == s);
    }
    for (auto t : {TaskType::Regression, TaskType::Classification, TaskType::Recommendation, TaskType::Ranking,
                   TaskType::NetworkBuilding, TaskType::AnomalyDetection}) {
      CHECK(parse_task_type(to_string(t)) == t);
      CHECK_FALSE(valid_metrics(t).empty());
    }
    CHECK_FALSE(parse_scenario("space").has_value());
  }

  TEST_CASE("validation lists every violation") {
    CHECK(validate_spec(valid_spec_json()).empty());

    auto bad = valid_spec_json();
    bad["metrics"] = json::array();
    bad["dataset"]["path"] = "";
    bad["scenario"] = "moon";
    const auto v = validate_spec(bad);
    CHECK(v.size() == 3);
    CHECK(std::find(v.begin(), v.end(), "metrics: empty") != v.end());
    CHECK(std::find(v.begin(), v.end(), "dataset.path: empty") != v.end());

    auto wrong_metric = valid_spec_json();
    wrong_metric["metrics"] = {"nmse"};
    CHECK(validate_spec(wrong_metric).size() == 1);

    try {
      BenchmarkSpec::from_json(bad);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(e.violations() == v);
    }
    CHECK(validate_spec(json::array()).size() == 1);
  }

  TEST_CASE("specs round-trip and ids are content hashes") {
    const auto spec = BenchmarkSpec::from_json(valid_spec_json());
    CHECK(BenchmarkSpec::from_json(spec.to_json()) == spec);
    CHECK(spec_id(spec).size() == 16);
    auto other = spec;
    other.seed = 43;
    CHECK(spec_id(other) != spec_id(spec));
  }

  TEST_CASE("the catalog lists nine tasks, three runnable") {
    const auto& c = task_catalog();
    CHECK(c.size() == 9);
    CHECK(std::count_if(c.begin(), c.end(), [](const TaskEntry& t) { return t.implemented; }) == 3);
    const auto text = json::parse(catalog_json(std::vector<std::string>{"abc"}));
    CHECK(text["specs"][0] == "abc");
    CHECK(text["tasks"].size() == 9);
  }

  TEST_CASE("registry stores specs and runs") {
    testing::TempDir dir("registry");
    Registry reg(dir.path());
    const auto spec = BenchmarkSpec::from_json(valid_spec_json());
    const auto id = reg.register_spec(spec);
    CHECK(reg.register_spec(spec) == id);
    CHECK(reg.ids() == std::vector<std::string>{id});
    CHECK(reg.load(id) == spec);
    CHECK(reg.runs(id).empty());
    CHECK_THROWS_AS(reg.load("feedface"), Error);

    RunResult r;
    r.spec_id = id;
    r.metrics["auc"] = 0.75;
    for (int i = 0; i < 3; ++i) {
      r.seed = static_cast<std::uint64_t>(i);
      reg.save_run(r);
    }
    const auto runs = reg.runs(id);
    REQUIRE(runs.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(runs[static_cast<std::size_t>(i)]["seed"] == i);
    CHECK(runs[0]["metrics"]["auc"] == 0.75);
  }

  TEST_CASE("link prediction benchmark end to end") {
    testing::TempDir dir("bench-lp");
    save_edge_list(testing::planted_partition(), (dir / "graph.tsv").string());
    Registry reg(dir / "reg");
    auto spec_obj = valid_spec_json();
    spec_obj["metrics"] = {"auc", "wall_time"};
    const auto id = reg.register_spec(spec_for(dir / "graph.tsv", spec_obj));
    const auto a = run_benchmark(reg, id, dir.path());
    const auto b = run_benchmark(reg, id, dir.path());
    REQUIRE(a.metrics.at("auc").has_value());
    CHECK(*a.metrics.at("auc") > 0.65);
    CHECK(a.metrics.at("auc") == b.metrics.at("auc"));
    CHECK(a.artifacts.size() == 1);
    CHECK(reg.runs(id).size() == 2);

    write_file(dir / "graph.tsv", "a\tb\t1\n");
    try {
      run_benchmark(reg, id, dir.path());
      FAIL("expected ChecksumMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ChecksumMismatch);
    }
  }

  TEST_CASE("completion and classification benchmarks") {
    testing::TempDir dir("bench-other");
    {
      std::ofstream out(dir / "m.csv");
      out << "repo,2023-01,2023-02,2023-03,2023-04,2023-05,2023-06\n";
      for (int r = 0; r < 8; ++r) {
        out << "o/r" << r;
        for (int c = 0; c < 6; ++c) out << ',' << (r + 1) * 10 + c * (r % 3);
        out << '\n';
      }
    }
    Registry reg(dir / "reg");
    auto reg_spec = valid_spec_json();
    reg_spec["task_name"] = "Behavior Data Completion and Prediction";
    reg_spec["task_type"] = "Regression";
    reg_spec["dataset"] = {{"path", "m.csv"}, {"format", "metric_matrix"}};
    reg_spec["model"] = {{"adapter", "linear"}, {"params", {{"mask_fraction", 0.25}}}};
    reg_spec["metrics"] = {"nmse", "nrmse"};
    const auto rid = reg.register_spec(spec_for(dir / "m.csv", reg_spec));
    const auto rr = run_benchmark(reg, rid, dir.path());
    CHECK(*rr.metrics.at("nrmse") == std::sqrt(*rr.metrics.at("nmse")));

    {
      std::ofstream out(dir / "f.csv");
      write_features_csv(testing::separable_accounts(40, 4), out);
    }
    auto cls = valid_spec_json();
    cls["task_name"] = "OSS Bot Identification and Classification";
    cls["task_type"] = "Classification";
    cls["dataset"] = {{"path", "f.csv"}, {"format", "features"}};
    cls["model"] = {{"adapter", "logistic"}};
    cls["metrics"] = {"accuracy", "auc"};
    const auto cid = reg.register_spec(spec_for(dir / "f.csv", cls));
    const auto cr = run_benchmark(reg, cid, dir.path());
    CHECK(*cr.metrics.at("accuracy") == 1.0);

    cls["model"]["adapter"] = "xgboost";
    const auto missing = reg.register_spec(spec_for(dir / "f.csv", cls));
    try {
      run_benchmark(reg, missing, dir.path());
      FAIL("expected AdapterMissing");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::AdapterMissing);
    }

    cls["task_name"] = "Community Sentiment Classification";
    cls["model"]["adapter"] = "logistic";
    const auto stub = reg.register_spec(spec_for(dir / "f.csv", cls));
    try {
      run_benchmark(reg, stub, dir.path());
      FAIL("expected TaskNotImplemented");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::TaskNotImplemented);
    }
  }

  TEST_CASE("competition ranking") {
    const std::vector<std::pair<std::string, double>> results{{"c", 2.0}, {"a", 5.0}, {"b", 2.0}, {"d", 1.0}};
    const auto board = build_leaderboard(results, "OpenRank", "2023-06");
    const std::vector<LeaderboardEntry> expected{{1, "a", 5.0}, {2, "b", 2.0}, {2, "c", 2.0}, {4, "d", 1.0}};
    CHECK(board.entries == expected);
    CHECK(top_n(board, 2).entries.size() == 2);
    CHECK(top_n(board, 10).entries.size() == 4);

    const std::vector<std::pair<std::string, double>> bad{{"x", std::nan("")}};
    CHECK_THROWS_AS(build_leaderboard(bad, "i", "c"), Error);
  }

  TEST_CASE("exports round-trip") {
    const std::vector<std::pair<std::string, double>> results{
        {"NixOS/nixpkgs", 5163.91}, {"odd,\"name\"", 2470.15}, {"x/<y>", 0.1}};
    const auto board = build_leaderboard(results, "OpenRank", "2023-06");
    CHECK(parse_leaderboard_json(export_leaderboard(board, ExportFormat::Json)) == board);
    auto entries_only = board;
    entries_only.index_name.clear();
    entries_only.context.clear();
    CHECK(parse_leaderboard_csv(export_leaderboard(board, ExportFormat::Csv)) == entries_only);
    const auto html = export_leaderboard(board, ExportFormat::Html);
    CHECK(html.find("x/&lt;y&gt;") != std::string::npos);
    CHECK(parse_export_format("HTML") == ExportFormat::Html);
    CHECK_THROWS_AS(parse_export_format("xml"), Error);
    CHECK_THROWS_AS(parse_leaderboard_csv("entity,value\n"), Error);
  }
}
