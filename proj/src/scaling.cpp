#include "benchkit/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "benchkit/numbers.hpp"

namespace benchkit {

std::string_view to_string(ScalingMode mode) { return mode == ScalingMode::strong ? "strong" : "weak"; }

void validate_series(const ScalingSeries& series) {
  if (series.points.empty()) throw ScalingError("series '" + series.benchmark + "' has no points");
  if (series.reference_index >= series.points.size()) throw ScalingError("reference index out of range");
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    if (p.nodes < 1) throw ScalingError("node counts must be positive");
    if (!(p.runtime_seconds > 0.0) || !std::isfinite(p.runtime_seconds)) {
      throw ScalingError("runtimes must be positive and finite");
    }
    if (i > 0 && p.nodes <= series.points[i - 1].nodes) {
      throw ScalingError("node counts must be strictly increasing and unique");
    }
  }
}

ScalingSeries make_series(std::string benchmark, ScalingMode mode, std::vector<ScalingPoint> points,
                          int reference_nodes) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.nodes < b.nodes; });
  ScalingSeries s{std::move(benchmark), mode, std::move(points), 0};
  const auto it = std::find_if(s.points.begin(), s.points.end(),
                               [&](const auto& p) { return p.nodes == reference_nodes; });
  if (it == s.points.end()) {
    throw ScalingError("no point at the reference node count " + std::to_string(reference_nodes));
  }
  s.reference_index = static_cast<std::size_t>(it - s.points.begin());
  validate_series(s);
  return s;
}

std::vector<RelativePoint> relative_series(const ScalingSeries& series) {
  validate_series(series);
  const auto& ref = series.reference();
  std::vector<RelativePoint> out;
  out.reserve(series.points.size());
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    if (i == series.reference_index) {
      out.push_back({1.0, 1.0});
      continue;
    }
    const auto& p = series.points[i];
    out.push_back({static_cast<double>(p.nodes) / ref.nodes, p.runtime_seconds / ref.runtime_seconds});
  }
  return out;
}

std::vector<StrongPoint> strong_speedup_efficiency(const ScalingSeries& series) {
  validate_series(series);
  if (series.mode != ScalingMode::strong) throw ScalingError("strong scaling analysis needs a strong series");
  const auto& ref = series.reference();
  std::vector<StrongPoint> out;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    if (i == series.reference_index) {
      out.push_back({p.nodes, 1.0, 1.0});
      continue;
    }
    const auto speedup = ref.runtime_seconds / p.runtime_seconds;
    out.push_back({p.nodes, speedup, speedup * ref.nodes / p.nodes});
  }
  return out;
}

std::vector<WeakPoint> weak_efficiency(const ScalingSeries& series) {
  validate_series(series);
  if (series.mode != ScalingMode::weak) throw ScalingError("weak scaling analysis needs a weak series");
  const auto& ref = series.reference();
  std::vector<WeakPoint> out;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    out.push_back({p.nodes, i == series.reference_index ? 1.0 : ref.runtime_seconds / p.runtime_seconds});
  }
  return out;
}

AmdahlFit fit_amdahl(const ScalingSeries& series) {
  validate_series(series);
  const auto n = static_cast<double>(series.points.size());
  if (series.points.size() < 2) throw ScalingError("amdahl fit needs at least two distinct node counts");

  double mean_x = 0.0, mean_t = 0.0;
  for (const auto& p : series.points) {
    mean_x += 1.0 / p.nodes;
    mean_t += p.runtime_seconds;
  }
  mean_x /= n;
  mean_t /= n;
  double sxx = 0.0, sxt = 0.0;
  for (const auto& p : series.points) {
    const auto dx = 1.0 / p.nodes - mean_x;
    sxx += dx * dx;
    sxt += dx * (p.runtime_seconds - mean_t);
  }
  if (sxx == 0.0) throw ScalingError("degenerate design: all 1/N are equal");

  AmdahlFit fit;
  fit.parallel_seconds = sxt / sxx;
  fit.serial_seconds = mean_t - fit.parallel_seconds * mean_x;
  // Active-set step for the non-negativity constraints.
  if (fit.parallel_seconds < 0.0) {
    fit.parallel_seconds = 0.0;
    fit.serial_seconds = mean_t;
  } else if (fit.serial_seconds < 0.0) {
    double sx2 = 0.0, sx_t = 0.0;
    for (const auto& p : series.points) {
      const auto x = 1.0 / p.nodes;
      sx2 += x * x;
      sx_t += x * p.runtime_seconds;
    }
    fit.serial_seconds = 0.0;
    fit.parallel_seconds = sx_t / sx2;
  }

  double ss = 0.0;
  for (const auto& p : series.points) {
    const auto r = p.runtime_seconds - fit.predict(p.nodes);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

std::string export_series_csv(const ScalingSeries& series) {
  validate_series(series);
  std::string out = "nodes,runtime_s\n";
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    out += std::to_string(series.points[i].nodes);
    if (i == series.reference_index) out += '*';
    out += ',';
    out += format_real(series.points[i].runtime_seconds);
    out += '\n';
  }
  return out;
}

ScalingSeries import_series_csv(std::string_view text, std::string benchmark, ScalingMode mode) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<ScalingPoint> points;
  std::optional<int> reference;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "nodes,runtime_s") throw ScalingError("expected header 'nodes,runtime_s'");
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ScalingError("line " + std::to_string(line_no) + ": expected two fields");
    auto nodes_text = line.substr(0, comma);
    const bool is_ref = !nodes_text.empty() && nodes_text.back() == '*';
    if (is_ref) nodes_text.pop_back();
    const auto nodes = parse_real(nodes_text);
    const auto runtime = parse_real(line.substr(comma + 1));
    if (!nodes || !runtime || *nodes != std::floor(*nodes) || *nodes < 1 || *nodes > 1e9) {
      throw ScalingError("line " + std::to_string(line_no) + ": malformed point");
    }
    if (is_ref) {
      if (reference) throw ScalingError("more than one reference point");
      reference = static_cast<int>(*nodes);
    }
    points.push_back({static_cast<int>(*nodes), *runtime});
  }
  if (line_no == 0) throw ScalingError("expected header 'nodes,runtime_s'");
  if (!reference) throw ScalingError("no reference point marked with '*'");
  return make_series(std::move(benchmark), mode, std::move(points), *reference);
}

}  // namespace benchkit
