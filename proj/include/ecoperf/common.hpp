#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ecoperf {

// Error handling --------------------------------------------------------

enum class Errc {
  ParseError,
  IoError,
  ManifestCorrupt,
  Locked,
  KindError,
  EmptyGraph,
  UnknownNode,
  SameNode,
  TooFewEdges,
  NoAbsentEdges,
  NotImplemented,
  NothingToMask,
  EmptyMatrix,
  ZeroVariance,
  SingleClass,
  DegenerateData,
  ValidationError,
  ChecksumMismatch,
  AdapterMissing,
  TaskNotImplemented,
  UnknownId,
  InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Dense aliases used throughout the numeric kernels.
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;
using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Calendar --------------------------------------------------------------

using Timestamp = std::chrono::sys_seconds;

/// Calendar month, the partition and reporting unit.
struct Month {
  int year = 1970;
  int month = 1;  // 1..12

  static Month parse(std::string_view text);  // "YYYY-MM", throws InvalidArgument
  static Month of(Timestamp t);
  std::string str() const;
  Month next() const;
  Timestamp begin() const;

  auto operator<=>(const Month&) const = default;
};

/// Inclusive month range; empty when from > to.
struct MonthRange {
  Month from;
  Month to;

  bool contains(Month m) const { return from <= m && m <= to; }
  std::vector<Month> months() const;
};

/// RFC3339 with optional fractional seconds (truncated) and offset, normalized to UTC.
Timestamp parse_rfc3339(std::string_view text);
std::string format_rfc3339(Timestamp t);

struct CivilTime {
  int year, month, day, hour, minute, second, weekday;  // weekday 0 = Sunday
};
CivilTime to_civil(Timestamp t);
std::int64_t day_number(Timestamp t);  // days since 1970-01-01

// Formatting ------------------------------------------------------------

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);  // throws InvalidArgument

std::string to_lower(std::string_view text);
std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

// Randomness ------------------------------------------------------------

/// SplitMix64 generator. Fully specified, so streams are identical on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() noexcept;
  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Uniform double in [0, 1).
  double uniform() noexcept;

 private:
  std::uint64_t state_;
};

/// Independent generator for item `index` of the stream keyed by `seed`.
SplitMix64 counter_stream(std::uint64_t seed, std::uint64_t index) noexcept;

/// Count of items selected by a fraction: nearest integer with ties rounded down, at least 1.
std::size_t fraction_count(double fraction, std::size_t total);

// Filesystem ------------------------------------------------------------

/// Exclusive lock held by creating `path`; released on destruction. Throws Locked if held elsewhere.
class FileLock {
 public:
  explicit FileLock(std::string path);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

/// Writes through a temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

// Hashing ---------------------------------------------------------------

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

}  // namespace ecoperf
