#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecoperf/common.hpp"
#include "ecoperf/event_store.hpp"
#include "ecoperf/weights.hpp"

namespace ecoperf {

/// Repo x month matrix of a behavioral metric. Unobserved cells hold NaN and are never read as data.
struct MetricMatrix {
  std::vector<std::string> repos;
  std::vector<Month> months;  // contiguous, strictly increasing
  MatrixXd values;
  MaskArray observed;

  static MetricMatrix empty(std::vector<std::string> repos, std::vector<Month> months);
  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  /// Throws InvalidArgument if shapes disagree or months are not gap-free.
  void validate() const;
  bool fully_observed() const { return observed.all(); }
};

struct MetricKind {
  enum Kind { EventCount, Participants, WeightedActivity } kind = EventCount;
  EventWeightConfig weights;  // used by WeightedActivity
};

/// Cells for months without a store partition are unobserved; present months with no repo events read 0.
MetricMatrix build_metric_matrix(const EventStore& store, const std::vector<std::string>& repos, MonthRange range,
                                 const MetricKind& metric);

struct HeldoutCell {
  Eigen::Index row;
  Eigen::Index col;
  double value;
};

enum class MaskMode { Random, BlockTail };

struct MaskedMatrix {
  MetricMatrix masked;
  std::vector<HeldoutCell> heldout;  // sorted by (row, col)
};

/// Random hides fraction * |observed| cells (nearest, ties down, at least 1);
/// BlockTail hides every observed cell in the last ceil(fraction * months) columns.
MaskedMatrix apply_mask(const MetricMatrix& m, double fraction, std::uint64_t seed, MaskMode mode);

/// Pluggable completion model. Iterative models honor `max_iter`.
class Imputer {
 public:
  virtual ~Imputer() = default;
  virtual std::string name() const = 0;
  /// Returns a fully observed matrix; observed cells of the input are copied unchanged.
  virtual MetricMatrix impute(const MetricMatrix& masked) const = 0;

  int max_iter = 1000;
};

struct ImputeMethod {
  enum Kind { MeanRow, LinearInterp, SeasonalNaive, KNNRows } kind = MeanRow;
  int period = 12;  // SeasonalNaive
  int k = 3;        // KNNRows

  /// "mean", "linear", "seasonal[:period]", "knn[:k]".
  static ImputeMethod parse(std::string_view text);
  std::string str() const;
};

std::unique_ptr<Imputer> make_imputer(const ImputeMethod& method);

struct ImputeResult {
  MetricMatrix matrix;
  std::vector<std::size_t> flagged_rows;  // rows without any observed cell, filled with 0
};

/// Throws EmptyMatrix for a matrix without rows or columns.
ImputeResult impute(const MetricMatrix& masked, const ImputeMethod& method);

struct CompletionScore {
  double nmse = 0.0;
  double nrmse = 0.0;
  double nmae = 0.0;
  std::size_t n_evaluated = 0;
};

/// NMSE = sum (p - y)^2 / sum (y - mean)^2, NRMSE = sqrt(NMSE), NMAE = sum |p - y| / sum |y - mean|,
/// over held-out cells. Throws ZeroVariance when every held-out value is equal.
CompletionScore evaluate_completion(std::span<const HeldoutCell> truth, const MetricMatrix& predicted);
CompletionScore evaluate_completion(std::span<const double> truth, std::span<const double> predicted);

// Streaming anomaly detection ---------------------------------------------------

struct Anomaly {
  std::string repo;
  Month month;
  double value;
  double score;
};

/// Robust z-score detector over a sliding window: |x - median| / (1.4826 * MAD + eps).
/// The first `window` points only fill the window and are never flagged.
class AnomalyDetector {
 public:
  static constexpr double kEpsilon = 1e-9;

  explicit AnomalyDetector(std::size_t window = 12, double threshold = 3.5);

  /// Score of `value` against the current window, or nullopt while the window is filling.
  std::optional<double> score(double value) const;
  /// Feeds one point; returns its score when it is flagged.
  std::optional<double> push(double value);

 private:
  std::size_t window_;
  double threshold_;
  std::vector<double> ring_;
  std::size_t next_ = 0;
};

/// Runs one detector per repo over the matrix rows (unobserved cells are skipped);
/// output ordered by repo name, then month.
std::vector<Anomaly> detect_anomalies(const MetricMatrix& m, std::size_t window, double threshold);
std::vector<Anomaly> detect_anomalies(const std::map<std::string, std::vector<std::pair<Month, double>>>& streams,
                                      std::size_t window, double threshold);

/// JSON lines `{"repo", "month", "value", "score"}`.
std::string anomalies_jsonl(std::span<const Anomaly> anomalies);

// File formats ------------------------------------------------------------------

/// CSV with header `repo,YYYY-MM,...`; missing cells are empty.
void write_metric_matrix(const MetricMatrix& m, std::ostream& out);
MetricMatrix read_metric_matrix(std::istream& in);
MetricMatrix load_metric_matrix(const std::string& path);
void save_metric_matrix(const MetricMatrix& m, const std::string& path);

/// CSV `repo,month,value` addressing cells by name.
void write_heldout(const MetricMatrix& m, std::span<const HeldoutCell> cells, std::ostream& out);
std::vector<HeldoutCell> read_heldout(const MetricMatrix& shape, std::istream& in);

std::string completion_score_json(const CompletionScore& s);

}  // namespace ecoperf
