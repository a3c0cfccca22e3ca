#include "ecoperf/botdetect.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace ecoperf {

using nlohmann::json;

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static const std::array<std::string_view, kFeatureCount> names{
      "name_contains_bot",     "total_events",        "distinct_repos",      "distinct_event_types",
      "event_type_entropy",    "median_gap_seconds",  "stddev_gap_seconds",  "modal_hour_fraction",
      "modal_weekday_fraction", "issue_comment_fraction", "pr_open_fraction", "pr_merge_fraction",
      "push_fraction",         "events_per_active_day", "max_events_per_day", "active_days",
      "longest_equal_gap_run",
  };
  return names;
}

std::string_view to_string(AccountLabel label) noexcept { return label == AccountLabel::Bot ? "bot" : "human"; }

AccountLabel parse_label(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "bot" || t == "1" || t == "true") return AccountLabel::Bot;
  if (t == "human" || t == "0" || t == "false") return AccountLabel::Human;
  throw Error(Errc::ParseError, "unknown label '" + std::string(text) + "'");
}

// Features ----------------------------------------------------------------------

AccountFeatures extract_features(std::string_view actor_login, std::span<const Event> events) {
  AccountFeatures f;
  f.actor_login = std::string(actor_login);
  auto& x = f.values;
  x[0] = to_lower(actor_login).find("bot") != std::string::npos ? 1.0 : 0.0;
  if (events.empty()) return f;

  std::vector<const Event*> sorted;
  for (const auto& e : events) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const Event* a, const Event* b) {
    return a->created_at != b->created_at ? a->created_at < b->created_at : a->event_id < b->event_id;
  });

  const auto total = static_cast<double>(sorted.size());
  std::set<std::string> repos;
  std::map<std::string, std::size_t> types;
  std::array<std::size_t, 24> hours{};
  std::array<std::size_t, 7> weekdays{};
  std::map<std::int64_t, std::size_t> days;
  for (const Event* e : sorted) {
    repos.insert(e->repo_name);
    ++types[e->type_key()];
    const auto c = to_civil(e->created_at);
    ++hours[static_cast<std::size_t>(c.hour)];
    ++weekdays[static_cast<std::size_t>(c.weekday)];
    ++days[day_number(e->created_at)];
  }

  std::vector<double> gaps;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    gaps.push_back(static_cast<double>((sorted[i]->created_at - sorted[i - 1]->created_at).count()));
  }

  double entropy = 0.0;
  for (const auto& [type, count] : types) {
    const double p = static_cast<double>(count) / total;
    entropy -= p * std::log2(p);
  }

  auto fraction_of = [&](EventType t) {
    auto it = types.find(std::string(type_name(t)));
    return it == types.end() ? 0.0 : static_cast<double>(it->second) / total;
  };

  x[1] = total;
  x[2] = static_cast<double>(repos.size());
  x[3] = static_cast<double>(types.size());
  x[4] = entropy;
  if (!gaps.empty()) {
    std::vector<double> sorted_gaps = gaps;
    std::sort(sorted_gaps.begin(), sorted_gaps.end());
    const std::size_t n = sorted_gaps.size();
    x[5] = n % 2 == 1 ? sorted_gaps[n / 2] : 0.5 * (sorted_gaps[n / 2 - 1] + sorted_gaps[n / 2]);
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    x[6] = std::sqrt(var / static_cast<double>(n));
  }
  x[7] = static_cast<double>(*std::max_element(hours.begin(), hours.end())) / total;
  x[8] = static_cast<double>(*std::max_element(weekdays.begin(), weekdays.end())) / total;
  x[9] = fraction_of(EventType::IssueComment);
  x[10] = fraction_of(EventType::PROpen);
  x[11] = fraction_of(EventType::PRMerge);
  x[12] = fraction_of(EventType::Push);
  x[13] = total / static_cast<double>(days.size());
  std::size_t busiest = 0;
  for (const auto& [day, count] : days) busiest = std::max(busiest, count);
  x[14] = static_cast<double>(busiest);
  x[15] = static_cast<double>(days.size());
  std::size_t longest = gaps.empty() ? 0 : 1, run = 1;
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    run = gaps[i] == gaps[i - 1] ? run + 1 : 1;
    longest = std::max(longest, run);
  }
  x[16] = static_cast<double>(longest);
  return f;
}

AccountFeatures extract_features(const EventStore& store, std::string_view actor_login, MonthRange range) {
  EventQuery q;
  q.range = range;
  q.actor_login = std::string(actor_login);
  const auto events = store.query(q);
  return extract_features(actor_login, std::span<const Event>(events));
}

std::vector<AccountFeatures> extract_features(const EventStore& store, std::span<const std::string> logins,
                                              MonthRange range) {
  std::unordered_map<std::string, std::vector<Event>> by_login;
  for (const auto& login : logins) by_login[login];
  EventQuery q;
  q.range = range;
  for (auto& e : store.query(q)) {
    auto it = by_login.find(e.actor_login);
    if (it != by_login.end()) it->second.push_back(std::move(e));
  }
  std::vector<AccountFeatures> out;
  for (const auto& login : logins) out.push_back(extract_features(login, std::span<const Event>(by_login[login])));
  return out;
}

// Classifier --------------------------------------------------------------------

namespace {

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

Vector<double> to_vector(const json& arr) {
  Vector<double> v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

json to_array(const Vector<double>& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

ClassifierModel train_classifier(std::span<const AccountFeatures> data, int epochs, double learning_rate,
                                 std::uint64_t seed) {
  if (epochs < 1) throw Error(Errc::InvalidArgument, "epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(Errc::InvalidArgument, "learning rate must be > 0");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(kFeatureCount);

  MatrixXd x(n, d);
  VectorXd y(n);
  bool has_bot = false, has_human = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = data[static_cast<std::size_t>(i)];
    if (!row.label) throw Error(Errc::InvalidArgument, "training row '" + row.actor_login + "' has no label");
    if (row.values.size() != d || !row.values.allFinite()) {
      throw Error(Errc::InvalidArgument, "row '" + row.actor_login + "' needs 17 finite features");
    }
    x.row(i) = row.values.transpose();
    y[i] = *row.label == AccountLabel::Bot ? 1.0 : 0.0;
    (y[i] > 0.5 ? has_bot : has_human) = true;
  }
  if (!has_bot || !has_human) throw Error(Errc::SingleClass, "training data needs both bots and humans");

  ClassifierModel model;
  model.meta = {epochs, learning_rate, seed, 0.0};
  model.mean = x.colwise().mean().transpose();
  VectorXd mask = VectorXd::Ones(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt((x.col(j).array() - model.mean[j]).square().mean());
    if (sd > 0.0) {
      model.stddev[j] = sd;
    } else {
      model.stddev[j] = 1.0;
      mask[j] = 0.0;
    }
  }
  if (mask.sum() == 0.0) throw Error(Errc::DegenerateData, "all rows are identical");

  const MatrixXd xs = (x.rowwise() - model.mean.transpose()).array().rowwise() / model.stddev.transpose().array();
  SplitMix64 rng(seed);
  for (Eigen::Index j = 0; j < d; ++j) model.weights[j] = mask[j] * (rng.uniform() - 0.5) * 0.02;

  auto probabilities = [&] {
    return ((xs * model.weights).array() + model.bias).unaryExpr([](double z) { return sigmoid(z); }).matrix().eval();
  };
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const VectorXd residual = probabilities() - y;
    const VectorXd grad = (xs.transpose() * residual) / static_cast<double>(n);
    model.weights -= learning_rate * grad.cwiseProduct(mask);
    model.bias -= learning_rate * residual.mean();
  }
  const VectorXd p = probabilities();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pi = std::clamp(p[i], 1e-15, 1.0 - 1e-15);
    loss -= y[i] * std::log(pi) + (1.0 - y[i]) * std::log(1.0 - pi);
  }
  model.meta.final_loss = loss / static_cast<double>(n);
  return model;
}

Prediction predict(const ClassifierModel& model, const Vector<double>& features) {
  const VectorXd z = (features - model.mean).cwiseQuotient(model.stddev);
  const double p = sigmoid(model.weights.dot(z) + model.bias);
  return {p >= 0.5 ? AccountLabel::Bot : AccountLabel::Human, p};
}

std::string ClassifierModel::to_json() const {
  return json{{"weights", to_array(weights)},
              {"bias", bias},
              {"mean", to_array(mean)},
              {"stddev", to_array(stddev)},
              {"feature_names", feature_names()},
              {"meta",
               {{"epochs", meta.epochs},
                {"learning_rate", meta.learning_rate},
                {"seed", meta.seed},
                {"final_loss", meta.final_loss}}}}
             .dump(2) +
         "\n";
}

ClassifierModel ClassifierModel::from_json(std::string_view text) {
  ClassifierModel m;
  try {
    const auto obj = json::parse(text);
    m.weights = to_vector(obj.at("weights"));
    m.bias = obj.at("bias").get<double>();
    m.mean = to_vector(obj.at("mean"));
    m.stddev = to_vector(obj.at("stddev"));
    const auto& meta = obj.at("meta");
    m.meta = {meta.at("epochs").get<int>(), meta.at("learning_rate").get<double>(),
              meta.at("seed").get<std::uint64_t>(), meta.at("final_loss").get<double>()};
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("bad model file: ") + e.what());
  }
  const auto d = static_cast<Eigen::Index>(kFeatureCount);
  if (m.weights.size() != d || m.mean.size() != d || m.stddev.size() != d || (m.stddev.array() <= 0.0).any()) {
    throw Error(Errc::ParseError, "model must hold 17 weights, means and positive stddevs");
  }
  return m;
}

// Metrics -----------------------------------------------------------------------

double mann_whitney_auc(std::span<const AccountLabel> labels, std::span<const double> scores) {
  std::vector<double> negatives, positives;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == AccountLabel::Bot ? positives : negatives).push_back(scores[i]);
  }
  if (positives.empty() || negatives.empty()) throw Error(Errc::SingleClass, "AUC needs both classes");
  std::sort(negatives.begin(), negatives.end());
  // Twice the Mann-Whitney U, kept integral so ties stay exact.
  std::uint64_t twice_u = 0;
  for (double s : positives) {
    const auto below = std::lower_bound(negatives.begin(), negatives.end(), s) - negatives.begin();
    const auto tied = std::upper_bound(negatives.begin(), negatives.end(), s) - negatives.begin() - below;
    twice_u += 2 * static_cast<std::uint64_t>(below) + static_cast<std::uint64_t>(tied);
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives.size()) *
                                         static_cast<double>(negatives.size()));
}

ClassificationReport classification_report(std::span<const AccountLabel> labels, std::span<const double> probabilities) {
  if (labels.size() != probabilities.size()) throw Error(Errc::InvalidArgument, "labels/probabilities length mismatch");
  if (labels.empty()) throw Error(Errc::InvalidArgument, "no rows to evaluate");
  ClassificationReport r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted_bot = probabilities[i] >= 0.5;
    const bool is_bot = labels[i] == AccountLabel::Bot;
    if (predicted_bot && is_bot) ++r.tp;
    else if (predicted_bot) ++r.fp;
    else if (is_bot) ++r.fn;
    else ++r.tn;
  }
  const auto total = static_cast<double>(labels.size());
  r.accuracy = static_cast<double>(r.tp + r.tn) / total;
  r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  const bool both = (r.tp + r.fn) > 0 && (r.fp + r.tn) > 0;
  if (both) r.auc = mann_whitney_auc(labels, probabilities);
  return r;
}

ClassificationReport eval_classification(const ClassifierModel& model, std::span<const AccountFeatures> data) {
  std::vector<AccountLabel> labels;
  std::vector<double> probs;
  for (const auto& row : data) {
    if (!row.label) throw Error(Errc::InvalidArgument, "evaluation row '" + row.actor_login + "' has no label");
    labels.push_back(*row.label);
    probs.push_back(predict(model, row.values).probability);
  }
  return classification_report(labels, probs);
}

std::string ClassificationReport::to_json() const {
  json obj{{"accuracy", accuracy}, {"precision", precision}, {"recall", recall}, {"f1", f1},
           {"tp", tp},             {"fp", fp},               {"tn", tn},         {"fn", fn}};
  obj["auc"] = auc ? json(*auc) : json(nullptr);
  return obj.dump(2) + "\n";
}

// File formats ------------------------------------------------------------------

void write_features_csv(std::span<const AccountFeatures> rows, std::ostream& out) {
  out << "actor_login";
  for (auto name : feature_names()) out << ',' << name;
  out << ",label\n";
  for (const auto& row : rows) {
    out << row.actor_login;
    for (Eigen::Index j = 0; j < row.values.size(); ++j) out << ',' << format_double(row.values[j]);
    out << ',' << (row.label ? to_string(*row.label) : "") << '\n';
  }
}

std::vector<AccountFeatures> read_features_csv(std::istream& in) {
  std::vector<AccountFeatures> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (header) {
      header = false;
      if (fields.size() != kFeatureCount + 2 || fields[0] != "actor_login") {
        throw Error(Errc::ParseError, "feature CSV header must be actor_login,<17 features>,label");
      }
      continue;
    }
    if (fields.size() != kFeatureCount + 2) throw Error(Errc::ParseError, "feature row needs 19 fields");
    AccountFeatures f;
    f.actor_login = fields[0];
    for (std::size_t j = 0; j < kFeatureCount; ++j) f.values[static_cast<Eigen::Index>(j)] = parse_double(fields[j + 1]);
    if (!trim(fields.back()).empty()) f.label = parse_label(fields.back());
    rows.push_back(std::move(f));
  }
  return rows;
}

std::vector<std::pair<std::string, AccountLabel>> read_labels_csv(std::istream& in) {
  std::vector<std::pair<std::string, AccountLabel>> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text, ',');
    if (fields.size() != 2) throw Error(Errc::ParseError, "label rows must be actor_login,label");
    if (trim(fields[0]) == "actor_login") continue;
    out.emplace_back(std::string(trim(fields[0])), parse_label(fields[1]));
  }
  return out;
}

}  // namespace ecoperf
