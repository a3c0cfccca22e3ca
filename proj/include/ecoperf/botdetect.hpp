#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecoperf/common.hpp"
#include "ecoperf/event_store.hpp"

namespace ecoperf {

enum class AccountLabel { Human, Bot };

inline constexpr std::size_t kFeatureCount = 17;

/// Column names, in vector order.
const std::array<std::string_view, kFeatureCount>& feature_names();

struct AccountFeatures {
  std::string actor_login;
  Vector<double> values = Vector<double>::Zero(kFeatureCount);
  std::optional<AccountLabel> label;
};

/// Behavioral and naming features of one account from its events (any order).
AccountFeatures extract_features(std::string_view actor_login, std::span<const Event> events);
AccountFeatures extract_features(const EventStore& store, std::string_view actor_login, MonthRange range);
/// One store pass for many accounts; output follows `logins` order.
std::vector<AccountFeatures> extract_features(const EventStore& store, std::span<const std::string> logins,
                                              MonthRange range);

struct TrainingMeta {
  int epochs = 500;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
};

/// Logistic model over standardized features.
struct ClassifierModel {
  Vector<double> weights = Vector<double>::Zero(kFeatureCount);
  double bias = 0.0;
  Vector<double> mean = Vector<double>::Zero(kFeatureCount);
  Vector<double> stddev = Vector<double>::Ones(kFeatureCount);  // zero-variance features get 1 and weight 0
  TrainingMeta meta;

  std::string to_json() const;
  static ClassifierModel from_json(std::string_view text);
};

/// Full-batch gradient descent on mean logistic loss. Throws SingleClass or DegenerateData.
ClassifierModel train_classifier(std::span<const AccountFeatures> data, int epochs, double learning_rate,
                                 std::uint64_t seed);

struct Prediction {
  AccountLabel label;
  double probability;  // of Bot
};

/// Bot iff probability >= 0.5.
Prediction predict(const ClassifierModel& model, const Vector<double>& features);

struct ClassificationReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  std::optional<double> auc;  // absent when only one class is present

  std::string to_json() const;
};

/// Threshold metrics at 0.5 plus the exact Mann-Whitney AUC (ties count half).
ClassificationReport classification_report(std::span<const AccountLabel> labels, std::span<const double> probabilities);
/// Threshold metrics are always filled; `auc` stays empty when the data lacks a class,
/// which callers report as SingleClass.
ClassificationReport eval_classification(const ClassifierModel& model, std::span<const AccountFeatures> data);

/// Exact AUC over every (positive, negative) pair; throws SingleClass.
double mann_whitney_auc(std::span<const AccountLabel> labels, std::span<const double> scores);

// File formats ------------------------------------------------------------------

/// CSV `actor_login,<17 feature names>,label`; label is bot/human or empty.
void write_features_csv(std::span<const AccountFeatures> rows, std::ostream& out);
std::vector<AccountFeatures> read_features_csv(std::istream& in);
/// CSV `actor_login,label`.
std::vector<std::pair<std::string, AccountLabel>> read_labels_csv(std::istream& in);
AccountLabel parse_label(std::string_view text);
std::string_view to_string(AccountLabel label) noexcept;

}  // namespace ecoperf
