#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "ecoperf/tseries.hpp"
#include "fixture.hpp"

using namespace ecoperf;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MetricMatrix matrix_of(std::vector<std::vector<double>> rows) {
  std::vector<std::string> repos;
  for (std::size_t i = 0; i < rows.size(); ++i) repos.push_back("o/r" + std::to_string(i));
  std::vector<Month> months;
  Month m{2022, 1};
  for (std::size_t j = 0; j < rows.front().size(); ++j, m = m.next()) months.push_back(m);
  auto out = MetricMatrix::empty(repos, months);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
      out.observed(r, c) = !std::isnan(rows[i][j]);
      out.values(r, c) = rows[i][j];
    }
  }
  return out;
}

MetricMatrix random_matrix(SplitMix64& rng, int rows, int cols) {
  std::vector<std::vector<double>> v(rows, std::vector<double>(cols));
  for (auto& row : v) {
    for (auto& x : row) x = std::round(100.0 * rng.uniform());
  }
  return matrix_of(v);
}

}  // namespace

TEST_SUITE("tseries") {
  TEST_CASE("matrix from the store") {
    testing::TempDir dir("ts-build");
    std::vector<std::string> lines;
    for (const auto& e : testing::fixture_events(2000)) lines.push_back(serialize_event(e));
    ingest_stream(lines, dir.path());
    const auto store = EventStore::open(dir.path());
    const std::vector<std::string> repos{"aurora/proj-0", "dune/proj-3", "nobody/none"};
    const MonthRange range{Month{2023, 3}, Month{2023, 6}};

    const auto counts = build_metric_matrix(store, repos, range, {MetricKind::EventCount, {}});
    CHECK(counts.cols() == 4);
    CHECK_FALSE(counts.observed(0, 0));  // March has no partition
    CHECK(counts.observed(2, 1));
    CHECK(counts.values(2, 1) == 0.0);

    const auto participants = build_metric_matrix(store, repos, range, {MetricKind::Participants, {}});
    for (Eigen::Index j = 1; j < 4; ++j) {
      const auto monthly = monthly_event_counts(store, range.months()[static_cast<std::size_t>(j)]);
      for (Eigen::Index i = 0; i < 2; ++i) {
        CHECK(participants.values(i, j) == static_cast<double>(monthly.at(repos[static_cast<std::size_t>(i)]).participants));
        CHECK(counts.values(i, j) == static_cast<double>(monthly.at(repos[static_cast<std::size_t>(i)]).log_increment));
      }
    }
  }

  TEST_CASE("three events make a cell of three") {
    testing::TempDir dir("ts-three");
    auto events = testing::fixture_events(3);
    std::vector<std::string> lines;
    for (auto& e : events) {
      e.repo_name = "x/y";
      e.created_at = Month{2023, 6}.begin();
      lines.push_back(serialize_event(e));
    }
    ingest_stream(lines, dir.path());
    const auto m = build_metric_matrix(EventStore::open(dir.path()), {"x/y"}, {Month{2023, 6}, Month{2023, 6}},
                                       {MetricKind::EventCount, {}});
    CHECK(m.values(0, 0) == 3.0);
  }

  TEST_CASE("masking partitions the observed cells") {
    SplitMix64 rng(3);
    auto m = random_matrix(rng, 6, 10);
    m.observed(2, 3) = false;
    m.values(2, 3) = kNaN;
    const auto masked = apply_mask(m, 0.3, 9, MaskMode::Random);
    std::set<std::pair<Eigen::Index, Eigen::Index>> held;
    for (const auto& c : masked.heldout) {
      CHECK(m.observed(c.row, c.col));
      CHECK_FALSE(masked.masked.observed(c.row, c.col));
      CHECK(c.value == m.values(c.row, c.col));
      held.insert({c.row, c.col});
    }
    CHECK(held.size() == masked.heldout.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const bool in_held = held.count({i, j}) > 0;
        CHECK(m.observed(i, j) == (masked.masked.observed(i, j) || in_held));
        CHECK_FALSE((masked.masked.observed(i, j) && in_held));
      }
    }
    CHECK(masked.heldout.size() == fraction_count(0.3, 59));

    const auto again = apply_mask(m, 0.3, 9, MaskMode::Random);
    CHECK((again.masked.observed == masked.masked.observed).all());
    CHECK(apply_mask(m, 1e-9, 9, MaskMode::Random).heldout.size() == 1);
  }

  TEST_CASE("tail blocks use the ceiling rule") {
    SplitMix64 rng(4);
    const auto m = random_matrix(rng, 3, 12);
    const auto masked = apply_mask(m, 0.25, 0, MaskMode::BlockTail);
    for (Eigen::Index j = 0; j < 12; ++j) CHECK(masked.masked.observed.col(j).any() == (j < 9));
    CHECK(masked.heldout.size() == 9);
  }

  TEST_CASE("nothing observed means nothing to mask") {
    auto m = matrix_of({{kNaN, kNaN}});
    CHECK_THROWS_AS(apply_mask(m, 0.5, 1, MaskMode::Random), Error);
  }

  TEST_CASE("baseline imputers") {
    const auto gap = matrix_of({{2.0, kNaN, 4.0}});
    CHECK(impute(gap, ImputeMethod::parse("linear")).matrix.values(0, 1) == 3.0);
    CHECK(impute(gap, ImputeMethod::parse("mean")).matrix.values(0, 1) == 3.0);

    const auto constant = matrix_of({{5.0, kNaN, 5.0, kNaN, 5.0, 5.0}});
    for (const char* method : {"mean", "linear", "seasonal:2", "knn:1"}) {
      const auto out = impute(constant, ImputeMethod::parse(method)).matrix;
      CHECK(out.fully_observed());
      for (Eigen::Index j = 0; j < 6; ++j) CHECK(out.values(0, j) == 5.0);
    }

    const auto seasonal = matrix_of({{1.0, 2.0, 3.0, kNaN, kNaN, 6.0}});
    const auto s = impute(seasonal, ImputeMethod::parse("seasonal:3")).matrix;
    CHECK(s.values(0, 3) == 1.0);
    CHECK(s.values(0, 4) == 2.0);

    const auto empty_row = matrix_of({{1.0, 2.0}, {kNaN, kNaN}});
    const auto r = impute(empty_row, ImputeMethod::parse("mean"));
    CHECK(r.flagged_rows == std::vector<std::size_t>{1});
    CHECK(r.matrix.values(1, 0) == 0.0);

    CHECK(ImputeMethod::parse("knn:4").str() == "knn:4");
    CHECK_THROWS_AS(ImputeMethod::parse("tamf"), Error);
  }

  TEST_CASE("KNN with k=1 copies the brute-force nearest row") {
    const auto m = matrix_of({{1.0, 2.0, kNaN, 4.0}, {1.5, 2.5, 30.0, 3.5}, {9.0, 9.0, 70.0, 9.0}});
    // Distances from row 0 over columns {0, 1, 3}.
    auto dist = [&](Eigen::Index a, Eigen::Index b) {
      double s = 0.0;
      for (Eigen::Index j : {0, 1, 3}) s += std::pow(m.values(a, j) - m.values(b, j), 2);
      return std::sqrt(s);
    };
    const Eigen::Index nearest = dist(0, 1) < dist(0, 2) ? 1 : 2;
    const auto out = impute(m, ImputeMethod::parse("knn:1")).matrix;
    CHECK(out.values(0, 2) == m.values(nearest, 2));
  }

  TEST_CASE("imputation never touches observed cells") {
    SplitMix64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      const auto m = random_matrix(rng, 5, 8);
      const auto masked = apply_mask(m, 0.4, static_cast<std::uint64_t>(trial), MaskMode::Random);
      for (const char* method : {"mean", "linear", "seasonal:3", "knn:2"}) {
        const auto out = impute(masked.masked, ImputeMethod::parse(method)).matrix;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (masked.masked.observed(i, j)) REQUIRE(out.values(i, j) == masked.masked.values(i, j));
          }
        }
      }
    }
  }

  TEST_CASE("completion metrics") {
    const std::vector<double> truth{1.0, 2.0, 3.0, 6.0};
    const auto perfect = evaluate_completion(truth, truth);
    CHECK(perfect.nmse == 0.0);
    CHECK(perfect.nrmse == 0.0);
    CHECK(perfect.nmae == 0.0);

    const std::vector<double> mean(4, 3.0);
    const auto baseline = evaluate_completion(truth, mean);
    CHECK(baseline.nmse == 1.0);
    CHECK(baseline.nmae == 1.0);

    // Hand values: errors (1, -1, 0, 2); squared 6 over variance sum 14; absolute 4 over 6.
    const std::vector<double> pred{2.0, 1.0, 3.0, 8.0};
    const auto s = evaluate_completion(truth, pred);
    CHECK(s.nmse == doctest::Approx(6.0 / 14.0));
    CHECK(s.nmae == doctest::Approx(4.0 / 6.0));
    CHECK(s.nrmse == std::sqrt(s.nmse));
    CHECK(s.n_evaluated == 4);

    const std::vector<double> flat(3, 2.0);
    CHECK_THROWS_AS(evaluate_completion(flat, flat), Error);
  }

  TEST_CASE("nrmse is the exact square root of nmse") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> t(10), p(10);
      for (int i = 0; i < 10; ++i) {
        t[i] = rng.uniform() * 50.0;
        p[i] = t[i] + (rng.uniform() - 0.5) * 10.0;
      }
      const auto s = evaluate_completion(t, p);
      REQUIRE(s.nrmse == std::sqrt(s.nmse));
    }
  }

  TEST_CASE("anomaly fixtures") {
    std::map<std::string, std::vector<std::pair<Month, double>>> streams;
    Month m{2022, 1};
    for (double x : {5.0, 5.0, 5.0, 5.0, 50.0}) {
      streams["step"].push_back({m, x});
      m = m.next();
    }
    m = Month{2022, 1};
    for (int i = 0; i < 24; ++i, m = m.next()) {
      streams["ramp"].push_back({m, 10.0 + 0.5 * i});
      streams["flat"].push_back({m, 7.0});
    }
    const auto found = detect_anomalies(streams, 4, 3.5);
    REQUIRE(found.size() == 1);
    CHECK(found[0].repo == "step");
    CHECK(found[0].value == 50.0);
    CHECK(found[0].score > 1e9);

    AnomalyDetector d(4, 3.5);
    for (int i = 0; i < 4; ++i) CHECK_FALSE(d.push(100.0 * i).has_value());
    CHECK_THROWS_AS(AnomalyDetector(3, 3.5), Error);
  }

  TEST_CASE("feeding in chunks equals feeding whole") {
    SplitMix64 rng(5);
    std::vector<double> series(60);
    for (auto& x : series) x = rng.uniform() * 10.0 + (rng.below(10) == 0 ? 80.0 : 0.0);
    AnomalyDetector whole(6, 3.0);
    std::vector<std::optional<double>> a;
    for (double x : series) a.push_back(whole.push(x));

    AnomalyDetector chunked(6, 3.0);
    std::vector<std::optional<double>> b;
    for (std::size_t i = 0; i < 25; ++i) b.push_back(chunked.push(series[i]));
    AnomalyDetector resumed = chunked;
    for (std::size_t i = 25; i < series.size(); ++i) b.push_back(resumed.push(series[i]));
    CHECK(a == b);
  }

  TEST_CASE("matrix and held-out files round-trip") {
    auto m = matrix_of({{1.5, kNaN, 3.0}, {0.1, 0.2, 0.3}});
    std::stringstream ss;
    write_metric_matrix(m, ss);
    CHECK(ss.str().rfind("repo,2022-01,2022-02,2022-03\no/r0,1.5,,3\n", 0) == 0);
    const auto back = read_metric_matrix(ss);
    CHECK((back.observed == m.observed).all());
    CHECK(back.values(1, 1) == 0.2);

    const std::vector<HeldoutCell> cells{{1, 2, 0.3}};
    std::stringstream hs;
    write_heldout(m, cells, hs);
    const auto cells_back = read_heldout(m, hs);
    REQUIRE(cells_back.size() == 1);
    CHECK(cells_back[0].row == 1);
    CHECK(cells_back[0].col == 2);
    CHECK(cells_back[0].value == 0.3);

    std::istringstream bad("repo,2022-01,2022-03\no/a,1,2\n");
    CHECK_THROWS_AS(read_metric_matrix(bad), Error);
  }
}
