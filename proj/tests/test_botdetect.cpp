#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ecoperf/botdetect.hpp"
#include "fixture.hpp"

using namespace ecoperf;

namespace {

Event at(const std::string& login, std::int64_t seconds, EventType type, const std::string& repo = "o/r") {
  Event e;
  e.event_id = login + "-" + std::to_string(seconds);
  e.type = type;
  e.raw_type = std::string(type_name(type));
  e.actor_id = 7;
  e.actor_login = login;
  e.repo_id = 1;
  e.repo_name = repo;
  e.created_at = Month{2023, 5}.begin() + std::chrono::seconds(seconds);
  return e;
}

double accuracy_of(const ClassifierModel& m, const std::vector<AccountFeatures>& rows) {
  return eval_classification(m, rows).accuracy;
}

}  // namespace

TEST_SUITE("botdetect") {
  TEST_CASE("features of a metronome account") {
    std::vector<Event> events;
    for (int day = 0; day < 10; ++day) events.push_back(at("release-bot", day * 86400 + 3600, EventType::Push));
    const auto f = extract_features("release-bot", events);
    CHECK(feature_names()[1] == "total_events");
    CHECK(f.values[0] == 1.0);
    CHECK(f.values[1] == 10.0);
    CHECK(f.values[2] == 1.0);
    CHECK(f.values[4] == 0.0);          // one type, zero entropy
    CHECK(f.values[5] == 86400.0);      // median gap
    CHECK(f.values[6] == 0.0);          // no spread
    CHECK(f.values[7] == 1.0);          // always the same hour
    CHECK(f.values[12] == 1.0);         // pushes only
    CHECK(f.values[15] == 10.0);        // active days
    CHECK(f.values[16] == 9.0);         // every gap equal

    const auto quiet = extract_features("Someone", std::vector<Event>{});
    CHECK(quiet.values.isZero());
  }

  TEST_CASE("entropy of an even two-type mix is one bit") {
    std::vector<Event> events{at("a", 0, EventType::Push), at("a", 50, EventType::IssueComment)};
    const auto f = extract_features("a", events);
    CHECK(f.values[4] == doctest::Approx(1.0));
    CHECK(f.values[9] == 0.5);
  }

  TEST_CASE("confusion counts match a direct tally") {
    SplitMix64 rng(606);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 5 + rng.below(40);
      std::vector<AccountLabel> labels;
      std::vector<double> probs;
      std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool bot = rng.below(2) == 1;
        const double p = static_cast<double>(rng.below(11)) / 10.0;  // hits 0.5 exactly sometimes
        labels.push_back(bot ? AccountLabel::Bot : AccountLabel::Human);
        probs.push_back(p);
        if (p >= 0.5) (bot ? tp : fp)++;
        else (bot ? fn : tn)++;
      }
      const auto r = classification_report(labels, probs);
      REQUIRE(r.tp == tp);
      REQUIRE(r.fp == fp);
      REQUIRE(r.tn == tn);
      REQUIRE(r.fn == fn);
      CHECK(r.accuracy == static_cast<double>(tp + tn) / static_cast<double>(n));
    }
  }

  TEST_CASE("AUC edge cases") {
    const std::vector<AccountLabel> labels{AccountLabel::Bot, AccountLabel::Human, AccountLabel::Bot,
                                           AccountLabel::Human};
    CHECK(mann_whitney_auc(labels, std::vector<double>(4, 0.3)) == 0.5);
    CHECK(mann_whitney_auc(labels, std::vector<double>{0.9, 0.1, 0.8, 0.2}) == 1.0);
    CHECK(mann_whitney_auc(labels, std::vector<double>{0.1, 0.9, 0.2, 0.8}) == 0.0);
    const std::vector<AccountLabel> bots(3, AccountLabel::Bot);
    CHECK_THROWS_AS(mann_whitney_auc(bots, std::vector<double>{0.1, 0.2, 0.3}), Error);
    CHECK_FALSE(classification_report(bots, std::vector<double>{0.1, 0.2, 0.9}).auc.has_value());
  }

  TEST_CASE("separable data trains to perfect accuracy") {
    const auto rows = testing::separable_accounts(80, 5);
    const auto model = train_classifier(rows, 500, 0.1, 5);
    CHECK(accuracy_of(model, rows) == 1.0);
    CHECK(model.meta.final_loss < 0.2);
  }

  TEST_CASE("a linear model cannot fit XOR") {
    const auto rows = testing::xor_accounts(25, 9);
    const auto model = train_classifier(rows, 500, 0.1, 9);
    CHECK(accuracy_of(model, rows) <= 0.75);
  }

  TEST_CASE("training refuses bad inputs") {
    auto rows = testing::separable_accounts(10, 1);
    for (auto& r : rows) r.label = AccountLabel::Human;
    try {
      train_classifier(rows, 10, 0.1, 1);
      FAIL("expected SingleClass");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SingleClass);
    }
    auto same = testing::separable_accounts(4, 1);
    for (auto& r : same) r.values.setZero();
    CHECK_THROWS_AS(train_classifier(same, 10, 0.1, 1), Error);
    CHECK_THROWS_AS(train_classifier(testing::separable_accounts(4, 1), 0, 0.1, 1), Error);
  }

  TEST_CASE("training is deterministic and models round-trip") {
    const auto rows = testing::separable_accounts(30, 3);
    const auto a = train_classifier(rows, 100, 0.1, 3);
    const auto b = train_classifier(rows, 100, 0.1, 3);
    CHECK(a.to_json() == b.to_json());
    const auto back = ClassifierModel::from_json(a.to_json());
    CHECK(back.to_json() == a.to_json());
    for (const auto& r : rows) CHECK(predict(back, r.values).probability == predict(a, r.values).probability);
    CHECK_THROWS_AS(ClassifierModel::from_json("{\"weights\": [1]}"), Error);
  }

  TEST_CASE("fixture automation accounts are found") {
    const auto events = testing::fixture_events(6000);
    std::map<std::string, std::vector<Event>> by_login;
    for (const auto& e : events) by_login[e.actor_login].push_back(e);
    const auto bots = testing::fixture_bots();
    std::vector<AccountFeatures> rows;
    for (const auto& [login, evs] : by_login) {
      if (evs.size() < 10) continue;
      auto f = extract_features(login, evs);
      f.label = std::find(bots.begin(), bots.end(), login) != bots.end() ? AccountLabel::Bot : AccountLabel::Human;
      rows.push_back(std::move(f));
    }
    const auto model = train_classifier(rows, 500, 0.1, 1);
    const auto report = eval_classification(model, rows);
    REQUIRE(report.auc.has_value());
    CHECK(*report.auc > 0.95);
  }

  TEST_CASE("feature and label files") {
    auto rows = testing::separable_accounts(3, 2);
    rows[2].label.reset();
    std::stringstream ss;
    write_features_csv(rows, ss);
    const auto back = read_features_csv(ss);
    REQUIRE(back.size() == 3);
    CHECK(back[0].actor_login == "acct-0");
    CHECK(back[0].label == AccountLabel::Bot);
    CHECK_FALSE(back[2].label.has_value());
    CHECK((back[1].values - rows[1].values).cwiseAbs().maxCoeff() == 0.0);

    std::istringstream labels("actor_login,label\nalice,human\nci-bot,bot\n");
    const auto parsed = read_labels_csv(labels);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[1].second == AccountLabel::Bot);
    CHECK_THROWS_AS(parse_label("robot"), Error);
  }
}
