#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace benchkit {

struct ScalingPoint {
  int nodes = 1;
  double runtime_seconds = 0.0;

  bool operator==(const ScalingPoint&) const = default;
};

enum class ScalingMode { strong, weak };

struct ScalingSeries {
  std::string benchmark;
  ScalingMode mode = ScalingMode::strong;
  std::vector<ScalingPoint> points;  // strictly increasing node counts
  std::size_t reference_index = 0;

  const ScalingPoint& reference() const { return points.at(reference_index); }
  bool operator==(const ScalingSeries&) const = default;
};

struct RelativePoint {
  double nodes = 1.0;    // nodes / reference nodes
  double runtime = 1.0;  // runtime / reference runtime
};

struct StrongPoint {
  int nodes = 1;
  double speedup = 1.0;
  double efficiency = 1.0;
};

struct WeakPoint {
  int nodes = 1;
  double efficiency = 1.0;
};

// t(N) = serial_seconds + parallel_seconds / N
struct AmdahlFit {
  double serial_seconds = 0.0;
  double parallel_seconds = 0.0;
  double residual = 0.0;  // RMS deviation of the fit, seconds

  double predict(double nodes) const { return serial_seconds + parallel_seconds / nodes; }
};

class ScalingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view to_string(ScalingMode mode);

/// Throws ScalingError when points are empty, unordered, non-positive or the
/// reference index is out of range.
void validate_series(const ScalingSeries& series);

/// Builds a series, sorting points by node count and locating the reference.
ScalingSeries make_series(std::string benchmark, ScalingMode mode, std::vector<ScalingPoint> points,
                          int reference_nodes);

std::vector<RelativePoint> relative_series(const ScalingSeries& series);

/// Speedup t(N_ref)/t(N) and efficiency speedup * N_ref / N.
std::vector<StrongPoint> strong_speedup_efficiency(const ScalingSeries& series);

/// t(N_ref)/t(N) at constant work per node. Super-linear values are kept.
std::vector<WeakPoint> weak_efficiency(const ScalingSeries& series);

/// Non-negative least-squares fit of t(N) = t_s + t_p / N.
AmdahlFit fit_amdahl(const ScalingSeries& series);

/// `nodes,runtime_s` text; the reference row carries a trailing `*` on the node count.
std::string export_series_csv(const ScalingSeries& series);
ScalingSeries import_series_csv(std::string_view text, std::string benchmark, ScalingMode mode);

}  // namespace benchkit
