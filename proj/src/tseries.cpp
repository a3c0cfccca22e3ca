#include "ecoperf/tseries.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "ecoperf/indices.hpp"

namespace ecoperf {

using nlohmann::json;

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::optional<double> row_mean(const MetricMatrix& m, Eigen::Index i) {
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (m.observed(i, j)) {
      sum += m.values(i, j);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

}  // namespace

// MetricMatrix ------------------------------------------------------------------

MetricMatrix MetricMatrix::empty(std::vector<std::string> repos, std::vector<Month> months) {
  MetricMatrix m;
  const auto r = static_cast<Eigen::Index>(repos.size());
  const auto c = static_cast<Eigen::Index>(months.size());
  m.repos = std::move(repos);
  m.months = std::move(months);
  m.values = MatrixXd::Constant(r, c, kMissing);
  m.observed = MaskArray::Constant(r, c, false);
  return m;
}

void MetricMatrix::validate() const {
  if (values.rows() != static_cast<Eigen::Index>(repos.size()) ||
      values.cols() != static_cast<Eigen::Index>(months.size()) || observed.rows() != values.rows() ||
      observed.cols() != values.cols()) {
    throw Error(Errc::InvalidArgument, "metric matrix shapes disagree");
  }
  for (std::size_t j = 1; j < months.size(); ++j) {
    if (months[j] != months[j - 1].next()) throw Error(Errc::InvalidArgument, "months must be contiguous");
  }
}

MetricMatrix build_metric_matrix(const EventStore& store, const std::vector<std::string>& repos, MonthRange range,
                                 const MetricKind& metric) {
  auto m = MetricMatrix::empty(repos, range.months());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Month month = m.months[static_cast<std::size_t>(j)];
    if (!store.has_month(month)) continue;
    std::unordered_map<std::string, double> cell;
    if (metric.kind == MetricKind::WeightedActivity) {
      for (const auto& r : compute_activity(store, month, metric.weights)) cell[r.entity] = r.value;
    } else {
      for (const auto& [repo, counts] : monthly_event_counts(store, month)) {
        cell[repo] = static_cast<double>(metric.kind == MetricKind::Participants ? counts.participants
                                                                                 : counts.log_increment);
      }
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      auto it = cell.find(m.repos[static_cast<std::size_t>(i)]);
      m.values(i, j) = it == cell.end() ? 0.0 : it->second;
      m.observed(i, j) = true;
    }
  }
  return m;
}

// Masking -----------------------------------------------------------------------

MaskedMatrix apply_mask(const MetricMatrix& m, double fraction, std::uint64_t seed, MaskMode mode) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error(Errc::InvalidArgument, "mask fraction must lie in (0, 1)");
  std::vector<std::pair<Eigen::Index, Eigen::Index>> hide;
  if (mode == MaskMode::Random) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (m.observed(i, j)) cells.emplace_back(i, j);
      }
    }
    if (cells.empty()) throw Error(Errc::NothingToMask, "matrix has no observed cells");
    const std::size_t k = fraction_count(fraction, cells.size());
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(cells[i], cells[i + static_cast<std::size_t>(rng.below(cells.size() - i))]);
    }
    hide.assign(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(k));
  } else {
    const auto n_cols = static_cast<std::size_t>(m.cols());
    const auto tail = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n_cols) - 1e-9)), 1, std::max<std::size_t>(n_cols, 1));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (auto j = static_cast<Eigen::Index>(n_cols - std::min(tail, n_cols)); j < m.cols(); ++j) {
        if (m.observed(i, j)) hide.emplace_back(i, j);
      }
    }
    if (hide.empty()) throw Error(Errc::NothingToMask, "no observed cells in the tail block");
  }
  std::sort(hide.begin(), hide.end());

  MaskedMatrix out{m, {}};
  for (const auto& [i, j] : hide) {
    out.heldout.push_back({i, j, m.values(i, j)});
    out.masked.values(i, j) = kMissing;
    out.masked.observed(i, j) = false;
  }
  return out;
}

// Imputation --------------------------------------------------------------------

ImputeMethod ImputeMethod::parse(std::string_view text) {
  const auto parts = split(to_lower(text), ':');
  ImputeMethod m;
  auto param = [&](int fallback) {
    if (parts.size() < 2) return fallback;
    const double v = parse_double(parts[1]);
    if (v < 1 || v != std::floor(v)) throw Error(Errc::InvalidArgument, "method parameter must be a positive integer");
    return static_cast<int>(v);
  };
  if (parts[0] == "mean" || parts[0] == "meanrow") {
    m.kind = MeanRow;
  } else if (parts[0] == "linear" || parts[0] == "linearinterp") {
    m.kind = LinearInterp;
  } else if (parts[0] == "seasonal" || parts[0] == "seasonalnaive") {
    m.kind = SeasonalNaive;
    m.period = param(12);
  } else if (parts[0] == "knn" || parts[0] == "knnrows") {
    m.kind = KNNRows;
    m.k = param(3);
  } else {
    throw Error(Errc::InvalidArgument, "unknown imputation method '" + std::string(text) + "'");
  }
  return m;
}

std::string ImputeMethod::str() const {
  switch (kind) {
    case MeanRow: return "mean";
    case LinearInterp: return "linear";
    case SeasonalNaive: return "seasonal:" + std::to_string(period);
    case KNNRows: return "knn:" + std::to_string(k);
  }
  return "mean";
}

namespace {

/// Shared skeleton: copy the input, fill each missing cell through `fill`, zero-fill rows with nothing observed.
template <typename Fill>
MetricMatrix fill_missing(const MetricMatrix& in, Fill fill) {
  MetricMatrix out = in;
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    const auto mean = row_mean(in, i);
    for (Eigen::Index j = 0; j < in.cols(); ++j) {
      if (in.observed(i, j)) continue;
      out.values(i, j) = mean ? fill(out, i, j, *mean) : 0.0;
    }
  }
  out.observed.setConstant(true);
  return out;
}

class MeanRowImputer final : public Imputer {
 public:
  std::string name() const override { return "mean"; }
  MetricMatrix impute(const MetricMatrix& m) const override {
    return fill_missing(m, [](const MetricMatrix&, Eigen::Index, Eigen::Index, double mean) { return mean; });
  }
};

class LinearInterpImputer final : public Imputer {
 public:
  std::string name() const override { return "linear"; }
  MetricMatrix impute(const MetricMatrix& m) const override {
    return fill_missing(m, [&m](const MetricMatrix&, Eigen::Index i, Eigen::Index j, double mean) {
      Eigen::Index prev = j - 1, next = j + 1;
      while (prev >= 0 && !m.observed(i, prev)) --prev;
      while (next < m.cols() && !m.observed(i, next)) ++next;
      const bool has_prev = prev >= 0, has_next = next < m.cols();
      if (has_prev && has_next) {
        const double t = static_cast<double>(j - prev) / static_cast<double>(next - prev);
        return m.values(i, prev) + t * (m.values(i, next) - m.values(i, prev));
      }
      if (has_prev) return m.values(i, prev);
      if (has_next) return m.values(i, next);
      return mean;
    });
  }
};

class SeasonalNaiveImputer final : public Imputer {
 public:
  explicit SeasonalNaiveImputer(int period) : period_(period) {}
  std::string name() const override { return "seasonal:" + std::to_string(period_); }
  MetricMatrix impute(const MetricMatrix& m) const override {
    // Columns are filled left to right, so a value one period back is already final.
    return fill_missing(m, [&m, p = period_](const MetricMatrix& partial, Eigen::Index i, Eigen::Index j, double mean) {
      if (j - p >= 0) return partial.values(i, j - p);
      for (Eigen::Index c = j + p; c < m.cols(); c += p) {
        if (m.observed(i, c)) return m.values(i, c);
      }
      return mean;
    });
  }

 private:
  int period_;
};

class KnnRowsImputer final : public Imputer {
 public:
  explicit KnnRowsImputer(int k) : k_(k) {}
  std::string name() const override { return "knn:" + std::to_string(k_); }
  MetricMatrix impute(const MetricMatrix& m) const override {
    // Euclidean distance between rows over co-observed columns; rows sharing none are not neighbors.
    const Eigen::Index n = m.rows();
    MatrixXd distance = MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a + 1; b < n; ++b) {
        double sum = 0.0;
        bool shared = false;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          if (m.observed(a, j) && m.observed(b, j)) {
            const double d = m.values(a, j) - m.values(b, j);
            sum += d * d;
            shared = true;
          }
        }
        if (shared) distance(a, b) = distance(b, a) = std::sqrt(sum);
      }
    }
    return fill_missing(m, [&](const MetricMatrix&, Eigen::Index i, Eigen::Index j, double mean) {
      std::vector<std::pair<double, Eigen::Index>> candidates;
      for (Eigen::Index r = 0; r < n; ++r) {
        if (r != i && m.observed(r, j) && std::isfinite(distance(i, r))) candidates.emplace_back(distance(i, r), r);
      }
      if (candidates.empty()) return mean;
      std::sort(candidates.begin(), candidates.end());
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k_), candidates.size());
      double sum = 0.0;
      for (std::size_t c = 0; c < take; ++c) sum += m.values(candidates[c].second, j);
      return sum / static_cast<double>(take);
    });
  }

 private:
  int k_;
};

}  // namespace

std::unique_ptr<Imputer> make_imputer(const ImputeMethod& method) {
  switch (method.kind) {
    case ImputeMethod::MeanRow: return std::make_unique<MeanRowImputer>();
    case ImputeMethod::LinearInterp: return std::make_unique<LinearInterpImputer>();
    case ImputeMethod::SeasonalNaive: return std::make_unique<SeasonalNaiveImputer>(method.period);
    case ImputeMethod::KNNRows: return std::make_unique<KnnRowsImputer>(method.k);
  }
  throw Error(Errc::InvalidArgument, "unknown imputation method");
}

ImputeResult impute(const MetricMatrix& masked, const ImputeMethod& method) {
  if (masked.rows() == 0 || masked.cols() == 0) throw Error(Errc::EmptyMatrix, "nothing to impute");
  masked.validate();
  ImputeResult result{make_imputer(method)->impute(masked), {}};
  for (Eigen::Index i = 0; i < masked.rows(); ++i) {
    if (!masked.observed.row(i).any()) result.flagged_rows.push_back(static_cast<std::size_t>(i));
  }
  return result;
}

// Evaluation --------------------------------------------------------------------

CompletionScore evaluate_completion(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.empty()) throw Error(Errc::InvalidArgument, "no held-out cells to evaluate");
  if (truth.size() != predicted.size()) throw Error(Errc::InvalidArgument, "truth/prediction length mismatch");
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double sq_err = 0.0, abs_err = 0.0, sq_dev = 0.0, abs_dev = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!std::isfinite(predicted[i])) throw Error(Errc::InvalidArgument, "prediction is not finite");
    const double err = predicted[i] - truth[i];
    const double dev = truth[i] - mean;
    sq_err += err * err;
    abs_err += std::abs(err);
    sq_dev += dev * dev;
    abs_dev += std::abs(dev);
  }
  if (sq_dev == 0.0 || abs_dev == 0.0) throw Error(Errc::ZeroVariance, "held-out values are constant");
  CompletionScore s;
  s.nmse = sq_err / sq_dev;
  s.nrmse = std::sqrt(s.nmse);
  s.nmae = abs_err / abs_dev;
  s.n_evaluated = truth.size();
  return s;
}

CompletionScore evaluate_completion(std::span<const HeldoutCell> cells, const MetricMatrix& predicted) {
  std::vector<double> truth, pred;
  for (const auto& c : cells) {
    if (c.row >= predicted.rows() || c.col >= predicted.cols()) {
      throw Error(Errc::InvalidArgument, "held-out cell outside the predicted matrix");
    }
    truth.push_back(c.value);
    pred.push_back(predicted.values(c.row, c.col));
  }
  return evaluate_completion(std::span<const double>(truth), std::span<const double>(pred));
}

std::string completion_score_json(const CompletionScore& s) {
  return json{{"nmse", s.nmse}, {"nrmse", s.nrmse}, {"nmae", s.nmae}, {"n_evaluated", s.n_evaluated}}.dump(2) + "\n";
}

// Anomaly detection -------------------------------------------------------------

AnomalyDetector::AnomalyDetector(std::size_t window, double threshold) : window_(window), threshold_(threshold) {
  if (window < 4) throw Error(Errc::InvalidArgument, "anomaly window must be >= 4");
  if (!(threshold > 0.0)) throw Error(Errc::InvalidArgument, "anomaly threshold must be > 0");
  ring_.reserve(window);
}

std::optional<double> AnomalyDetector::score(double value) const {
  if (ring_.size() < window_) return std::nullopt;
  const double med = median_of(ring_);
  std::vector<double> dev(ring_.size());
  std::transform(ring_.begin(), ring_.end(), dev.begin(), [med](double x) { return std::abs(x - med); });
  const double mad = median_of(std::move(dev));
  return std::abs(value - med) / (1.4826 * mad + kEpsilon);
}

std::optional<double> AnomalyDetector::push(double value) {
  const auto z = score(value);
  if (ring_.size() < window_) {
    ring_.push_back(value);
  } else {
    ring_[next_] = value;
    next_ = (next_ + 1) % window_;
  }
  if (z && *z > threshold_) return z;
  return std::nullopt;
}

std::vector<Anomaly> detect_anomalies(const std::map<std::string, std::vector<std::pair<Month, double>>>& streams,
                                      std::size_t window, double threshold) {
  std::vector<Anomaly> out;
  for (const auto& [repo, series] : streams) {
    AnomalyDetector detector(window, threshold);
    for (const auto& [month, value] : series) {
      if (auto z = detector.push(value)) out.push_back({repo, month, value, *z});
    }
  }
  return out;
}

std::vector<Anomaly> detect_anomalies(const MetricMatrix& m, std::size_t window, double threshold) {
  std::map<std::string, std::vector<std::pair<Month, double>>> streams;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto& series = streams[m.repos[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m.observed(i, j)) series.emplace_back(m.months[static_cast<std::size_t>(j)], m.values(i, j));
    }
  }
  return detect_anomalies(streams, window, threshold);
}

std::string anomalies_jsonl(std::span<const Anomaly> anomalies) {
  std::string out;
  for (const auto& a : anomalies) {
    out += json{{"repo", a.repo}, {"month", a.month.str()}, {"value", a.value}, {"score", a.score}}.dump();
    out += '\n';
  }
  return out;
}

// File formats ------------------------------------------------------------------

void write_metric_matrix(const MetricMatrix& m, std::ostream& out) {
  out << "repo";
  for (const auto& month : m.months) out << ',' << month.str();
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << m.repos[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << ',';
      if (m.observed(i, j)) out << format_double(m.values(i, j));
    }
    out << '\n';
  }
}

MetricMatrix read_metric_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ParseError, "empty metric matrix file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line, ',');
  if (header.empty() || trim(header[0]) != "repo") throw Error(Errc::ParseError, "header must start with 'repo'");
  std::vector<Month> months;
  for (std::size_t j = 1; j < header.size(); ++j) months.push_back(Month::parse(trim(header[j])));

  std::vector<std::string> repos;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw Error(Errc::ParseError, "row '" + fields[0] + "' has " + std::to_string(fields.size()) + " fields");
    }
    repos.push_back(std::string(trim(fields[0])));
    rows.push_back(std::move(fields));
  }
  auto m = MetricMatrix::empty(std::move(repos), std::move(months));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 1; j < rows[i].size(); ++j) {
      const auto cell = trim(rows[i][j]);
      if (cell.empty()) continue;
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = parse_double(cell);
      m.observed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = true;
    }
  }
  m.validate();
  return m;
}

MetricMatrix load_metric_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  return read_metric_matrix(in);
}

void save_metric_matrix(const MetricMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  write_metric_matrix(m, out);
}

void write_heldout(const MetricMatrix& m, std::span<const HeldoutCell> cells, std::ostream& out) {
  out << "repo,month,value\n";
  for (const auto& c : cells) {
    out << m.repos[static_cast<std::size_t>(c.row)] << ',' << m.months[static_cast<std::size_t>(c.col)].str() << ','
        << format_double(c.value) << '\n';
  }
}

std::vector<HeldoutCell> read_heldout(const MetricMatrix& shape, std::istream& in) {
  std::unordered_map<std::string, Eigen::Index> row_of;
  for (std::size_t i = 0; i < shape.repos.size(); ++i) row_of[shape.repos[i]] = static_cast<Eigen::Index>(i);
  std::vector<HeldoutCell> cells;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.rfind("repo,", 0) == 0) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3) throw Error(Errc::ParseError, "held-out rows must be repo,month,value");
    auto row = row_of.find(std::string(trim(fields[0])));
    if (row == row_of.end()) throw Error(Errc::ParseError, "held-out repo '" + fields[0] + "' not in matrix");
    const Month month = Month::parse(trim(fields[1]));
    auto col = std::find(shape.months.begin(), shape.months.end(), month);
    if (col == shape.months.end()) throw Error(Errc::ParseError, "held-out month " + month.str() + " not in matrix");
    cells.push_back({row->second, col - shape.months.begin(), parse_double(fields[2])});
  }
  return cells;
}

}  // namespace ecoperf
