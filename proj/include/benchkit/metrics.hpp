#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "benchkit/specmodel.hpp"

namespace benchkit {

enum class MetricKind { time, rate, other };

struct Metric {
  std::string name = "fom";
  double value = 0.0;
  std::string unit;
  MetricKind kind = MetricKind::other;

  bool operator==(const Metric&) const = default;
};

struct VerificationOutcome {
  VerificationRule rule;
  std::string observed;
  bool passed = false;
  std::string detail;

  bool operator==(const VerificationOutcome&) const = default;
};

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The pattern did not match anywhere in the output.
class FomNoMatch : public MetricError {
 public:
  using MetricError::MetricError;
};

// The pattern matched but the captured text is not a number.
class FomParseError : public MetricError {
 public:
  using MetricError::MetricError;
};

std::string_view to_string(MetricKind kind);

/// Last match of fom.pattern in `output`, captured group parsed as a real.
Metric extract_metrics(std::string_view output, const FomSpec& fom);

/// Time-to-solution in seconds. Rates are converted with fom.work_units.
double normalize_fom(const Metric& metric, const FomSpec& fom);

/// Seconds per unit for the accepted time units (s, ms, us, ns, min, h).
double seconds_per(std::string_view time_unit);

/// |observed - reference| <= rel_tolerance * |reference|. A zero reference
/// falls back to an absolute comparison and says so in `detail`.
VerificationOutcome verify_scalar(double observed, double reference, double rel_tolerance);

/// Passes iff every key occurs in the output.
VerificationOutcome verify_presence(std::string_view output, const std::vector<std::string>& keys);

/// Token following the last occurrence of `key` in the output (whitespace-delimited).
std::optional<std::string> value_after_key(std::string_view output, std::string_view key);

/// Reads a reference file: one value per line, `#` starts a comment, blank lines skipped.
std::vector<std::string> read_reference_values(const std::filesystem::path& path);
std::vector<std::string> parse_reference_values(std::string_view text);

/// Applies one rule against a run's output and extracted metrics. Relative
/// reference paths are resolved against `base_dir`.
VerificationOutcome apply_rule(const VerificationRule& rule, std::string_view output,
                               const std::map<std::string, double>& metrics,
                               const std::filesystem::path& base_dir = {});

}  // namespace benchkit
