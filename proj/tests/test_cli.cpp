#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ecoperf/bench.hpp"
#include "fixture.hpp"
#include "pipeline.hpp"

using namespace ecoperf;
using testing::cli;
using nlohmann::json;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string ingest_fixture(const testing::TempDir& dir, std::size_t n = 3000) {
  const auto store = (dir / "store").string();
  const auto r = cli({"ingest", "--store", store}, testing::fixture_ndjson(n));
  REQUIRE(r.code == 0);
  return store;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2 with a hint") {
    auto r = cli({});
    CHECK(r.code == 2);
    CHECK(r.err.find("--help") != std::string::npos);

    r = cli({"index", "openrank", "--bogus"});
    CHECK(r.code == 2);

    r = cli({"linkpred", "eval", "--graph", "nowhere.tsv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("Remedy:") != std::string::npos);

    r = cli({"index", "openrank"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--store") != std::string::npos);

    CHECK(cli({"--help"}).code == 0);
  }

  TEST_CASE("domain errors exit 1") {
    testing::TempDir dir("cli-errors");
    const auto store = ingest_fixture(dir, 200);
    auto r = cli({"index", "openrank", "--store", store, "--month", "1999-01"});
    CHECK(r.code == 1);
    CHECK(r.err.find("1999-01") != std::string::npos);
    r = cli({"ts", "eval", "--matrix", (dir / "missing.csv").string(), "--heldout", "x"});
    CHECK(r.code == 1);
  }

  TEST_CASE("ingest reports counts and --out writes a file") {
    testing::TempDir dir("cli-ingest");
    const auto store = (dir / "store").string();
    const auto out = dir / "report.json";
    auto r = cli({"-o", out.string(), "ingest", "--store", store}, testing::fixture_ndjson(500) + "not json\n");
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const auto report = json::parse(read_file(out));
    CHECK(report["accepted"] == 500);
    CHECK(report["rejected"] == 1);

    r = cli({"ingest", "--store", store}, testing::fixture_ndjson(500));
    CHECK(json::parse(r.out)["duplicates"] == 500);
  }

  TEST_CASE("config supplies store and seed") {
    testing::TempDir dir("cli-config");
    ingest_fixture(dir, 2000);
    write_file(dir / "cfg.json", R"({"store": "store", "seed": 11, "verbosity": "info"})");
    const auto cfg = (dir / "cfg.json").string();
    auto r = cli({"--config", cfg, "index", "activity", "--top", "3"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).size() == 3);

    cli({"--config", cfg, "graph", "build", "--month", "2023-05", "-o", (dir / "b.tsv").string()});
    cli({"graph", "project", "--graph", (dir / "b.tsv").string(), "-o", (dir / "r.tsv").string()});
    r = cli({"--config", cfg, "linkpred", "eval", "--graph", (dir / "r.tsv").string()});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["seed"] == 11);

    write_file(dir / "bad.json", R"({"stor": "store"})");
    r = cli({"--config", (dir / "bad.json").string(), "index", "activity"});
    CHECK(r.code == 2);
    CHECK(r.err.find("stor") != std::string::npos);
  }

  TEST_CASE("completion workflow through files") {
    testing::TempDir dir("cli-ts");
    const auto store = ingest_fixture(dir, 4000);
    const auto m = (dir / "m.csv").string();
    REQUIRE(cli({"ts", "build", "--store", store, "-o", m}).code == 0);
    auto r = cli({"ts", "mask", "--matrix", m, "--fraction", "0.2", "--seed", "5", "--masked-out",
                  (dir / "masked.csv").string(), "--heldout", (dir / "held.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["seed"] == 5);
    REQUIRE(cli({"ts", "impute", "--matrix", (dir / "masked.csv").string(), "--method", "knn:2", "-o",
                 (dir / "filled.csv").string()})
                .code == 0);
    r = cli({"ts", "eval", "--matrix", (dir / "filled.csv").string(), "--heldout", (dir / "held.csv").string()});
    REQUIRE(r.code == 0);
    const auto score = json::parse(r.out);
    CHECK(score["nrmse"].get<double>() == std::sqrt(score["nmse"].get<double>()));

    r = cli({"ts", "anomaly", "--matrix", m, "--window", "4"});
    CHECK(r.code == 0);
  }

  TEST_CASE("bot workflow through files") {
    testing::TempDir dir("cli-bot");
    const auto store = ingest_fixture(dir, 6000);
    std::string labels = "actor_login,label\n";
    for (const auto& b : testing::fixture_bots()) labels += b + ",bot\n";
    for (int i = 0; i < 40; ++i) labels += "dev-" + std::to_string(i) + ",human\n";
    write_file(dir / "labels.csv", labels);
    const auto features = (dir / "f.csv").string();
    REQUIRE(cli({"bot", "features", "--store", store, "--labels", (dir / "labels.csv").string(), "-o", features}).code ==
            0);
    const auto model = (dir / "model.json").string();
    REQUIRE(cli({"bot", "train", "--features", features, "--seed", "1", "-o", model}).code == 0);
    auto r = cli({"bot", "eval", "--model", model, "--features", features});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["auc"].get<double>() > 0.9);

    std::string humans = "actor_login,label\ndev-1,human\ndev-2,human\n";
    write_file(dir / "humans.csv", humans);
    REQUIRE(cli({"bot", "features", "--store", store, "--labels", (dir / "humans.csv").string(), "-o",
                 (dir / "h.csv").string()})
                .code == 0);
    r = cli({"bot", "eval", "--model", model, "--features", (dir / "h.csv").string()});
    CHECK(r.code == 1);
    CHECK(json::parse(r.out)["auc"].is_null());
  }

  TEST_CASE("bench commands") {
    testing::TempDir dir("cli-bench");
    save_edge_list(testing::planted_partition(), (dir / "g.tsv").string());
    const auto sum = cli({"bench", "checksum", "--file", (dir / "g.tsv").string()});
    REQUIRE(sum.code == 0);
    const auto checksum = sum.out.substr(0, sum.out.find('\n'));
    CHECK(checksum.rfind("sha256:", 0) == 0);

    json spec{{"task_name", "Project Recommendation"},
              {"scenario", "CommunityOperations"},
              {"task_type", "Recommendation"},
              {"dataset", {{"path", "g.tsv"}, {"format", "edgelist"}, {"checksum", checksum}}},
              {"model", {{"adapter", "CN"}}},
              {"metrics", {"auc"}},
              {"run", {{"seed", 3}}}};
    write_file(dir / "spec.json", spec.dump());
    const auto reg = (dir / "reg").string();
    auto r = cli({"bench", "register", "--registry", reg, "--spec", (dir / "spec.json").string()});
    REQUIRE(r.code == 0);
    const auto id = json::parse(r.out)["id"].get<std::string>();
    r = cli({"bench", "run", "--registry", reg, "--id", id, "--data-dir", dir.path().string()});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["metrics"]["auc"].get<double>() > 0.65);
    r = cli({"bench", "runs", "--registry", reg, "--id", id});
    CHECK(json::parse(r.out).size() == 1);
    r = cli({"bench", "list", "--registry", reg});
    CHECK(json::parse(r.out)["specs"][0] == id);

    spec["metrics"] = json::array();
    spec["task_name"] = "";
    write_file(dir / "bad.json", spec.dump());
    r = cli({"bench", "register", "--registry", reg, "--spec", (dir / "bad.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("metrics: empty") != std::string::npos);
    CHECK(r.err.find("task_name: empty") != std::string::npos);
  }

  TEST_CASE("leaderboard export formats agree") {
    testing::TempDir dir("cli-board");
    const auto store = ingest_fixture(dir, 3000);
    const auto board = (dir / "b.json").string();
    REQUIRE(cli({"bench", "leaderboard", "--store", store, "--index", "activity", "-o", board}).code == 0);
    const auto csv = cli({"bench", "export", "-i", board, "--format", "csv", "--top", "5"});
    REQUIRE(csv.code == 0);
    const auto parsed = parse_leaderboard_csv(csv.out);
    const auto full = parse_leaderboard_json(read_file(board));
    REQUIRE(parsed.entries.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(parsed.entries[i] == full.entries[i]);
    write_file(dir / "b.csv", csv.out);
    const auto again = cli({"bench", "export", "-i", (dir / "b.csv").string(), "--format", "csv"});
    CHECK(again.out == csv.out);
  }

  TEST_CASE("the full pipeline is reproducible") {
    testing::TempDir a("cli-pipe-a"), b("cli-pipe-b");
    const auto first = testing::run_pipeline(a.path(), 1);
    const auto second = testing::run_pipeline(b.path(), 3);
    CHECK(first == second);
    CHECK(first.find("\"wall_time_seconds\": 0") != std::string::npos);
  }
}
