#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "benchkit/engine.hpp"

namespace benchkit {

struct StoredRecord {
  RunRecord record;
  std::string run_id;
  std::string suite_version;
  std::string system_fingerprint;

  bool operator==(const StoredRecord&) const = default;
};

struct Baseline {
  std::string benchmark;
  TagSet tags;
  int nodes = 1;
  int window = 5;
  std::size_t samples = 0;  // passing runs that entered the median
  double baseline_seconds = 0.0;
};

enum class Severity { info, warn, fail };

struct RegressionFinding {
  std::string run_id;
  Baseline baseline;
  double runtime_seconds = 0.0;
  double relative_slowdown = 0.0;
  Severity severity = Severity::info;
};

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultWindow = 5;
inline constexpr double kDefaultThreshold = 0.05;

std::string_view to_string(Severity severity);

/// Runtime used for baselines: the normalized `time_s` metric, else wall time.
double record_runtime(const RunRecord& record);

std::string encode_record(const StoredRecord& record);
StoredRecord decode_record(std::string_view line);

// Append-only newline-delimited record file. Appends are serialized through
// an internal mutex; the in-memory history only grows.
class Store {
 public:
  /// Opens (creating if missing) the store file. A torn trailing line is
  /// moved to `<path>.quarantine` and cut from the file.
  explicit Store(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }

  /// Durably appends the record; throws StoreError on duplicate run_id or I/O failure.
  std::string append_record(const StoredRecord& record);

  std::optional<StoredRecord> find(std::string_view run_id) const;
  std::vector<StoredRecord> records() const;
  std::size_t size() const;

  /// Text of a quarantined trailing line found when opening, if any.
  const std::optional<std::string>& quarantined() const { return quarantined_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<StoredRecord> records_;
  std::optional<std::string> quarantined_;
};

/// Reads a store file without modifying it; a torn trailing line is skipped.
std::vector<StoredRecord> read_store(const std::filesystem::path& path);

bool matches_group(const StoredRecord& r, std::string_view benchmark, const TagSet& tags, int nodes);

/// Median of the most recent `window` passing runtimes in the group (history in append order).
Baseline compute_baseline(const std::vector<StoredRecord>& history, std::string_view benchmark, const TagSet& tags,
                          int nodes, int window = kDefaultWindow);
Baseline compute_baseline(const Store& store, std::string_view benchmark, const TagSet& tags, int nodes,
                          int window = kDefaultWindow);

/// slowdown = runtime / baseline - 1; fail iff slowdown > threshold, warn iff
/// it lies in (0.9 * threshold, threshold], info otherwise.
RegressionFinding detect_regression(const StoredRecord& record, const Baseline& baseline,
                                    double threshold = kDefaultThreshold);
Severity classify_slowdown(double slowdown, double threshold);

}  // namespace benchkit
