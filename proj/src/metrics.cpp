#include "benchkit/metrics.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "benchkit/numbers.hpp"

namespace benchkit {

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::time: return "time";
    case MetricKind::rate: return "rate";
    case MetricKind::other: return "other";
  }
  return "other";
}

Metric extract_metrics(std::string_view output, const FomSpec& fom) {
  std::regex re;
  try {
    re = std::regex(fom.pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw MetricError("fom pattern does not compile: " + std::string(e.what()));
  }
  if (re.mark_count() != 1) throw MetricError("fom pattern must have exactly one capture group");

  std::optional<std::string> captured;
  for (auto it = std::cregex_iterator(output.data(), output.data() + output.size(), re);
       it != std::cregex_iterator(); ++it) {
    captured = (*it)[1].str();
  }
  if (!captured) throw FomNoMatch("fom pattern '" + fom.pattern + "' matched nothing");

  const auto value = parse_real(*captured);
  if (!value) throw FomParseError("captured fom text '" + *captured + "' is not a number");

  Metric m;
  m.value = *value;
  m.unit = fom.unit;
  m.kind = fom.kind == FomKind::time ? MetricKind::time : MetricKind::rate;
  return m;
}

double seconds_per(std::string_view unit) {
  if (unit == "s") return 1.0;
  if (unit == "ms") return 1e-3;
  if (unit == "us") return 1e-6;
  if (unit == "ns") return 1e-9;
  if (unit == "min") return 60.0;
  if (unit == "h") return 3600.0;
  throw MetricError("unknown time unit '" + std::string(unit) + "'");
}

double normalize_fom(const Metric& metric, const FomSpec& fom) {
  const auto expected = fom.kind == FomKind::time ? MetricKind::time : MetricKind::rate;
  if (metric.kind != expected) {
    throw MetricError("metric kind '" + std::string(to_string(metric.kind)) + "' does not match fom kind '" +
                      std::string(to_string(fom.kind)) + "'");
  }
  if (fom.kind == FomKind::time) {
    if (!(metric.value > 0.0)) throw MetricError("time metric must be strictly positive");
    const auto scale = seconds_per(fom.unit);
    return scale == 1.0 ? metric.value : metric.value * scale;
  }
  if (!fom.work_units) throw MetricError("rate fom requires work_units");
  if (!(metric.value > 0.0)) throw MetricError("rate must be strictly positive");
  return *fom.work_units / metric.value;
}

VerificationOutcome verify_scalar(double observed, double reference, double rel_tolerance) {
  if (!(rel_tolerance >= 0.0)) throw std::invalid_argument("rel_tolerance must be non-negative");
  VerificationOutcome out;
  out.rule.kind = VerificationKind::scalar_tolerance;
  out.rule.reference = format_real(reference);
  out.rule.rel_tolerance = rel_tolerance;
  out.observed = format_real(observed);
  const auto deviation = std::fabs(observed - reference);
  if (reference == 0.0) {
    out.passed = deviation <= rel_tolerance;
    out.detail = "warning: reference is zero, absolute tolerance applied; deviation " + format_real(deviation);
  } else {
    out.passed = deviation <= rel_tolerance * std::fabs(reference);
    out.detail = "relative deviation " + format_real(deviation / std::fabs(reference)) + " vs tolerance " +
                 format_real(rel_tolerance);
  }
  return out;
}

VerificationOutcome verify_presence(std::string_view output, const std::vector<std::string>& keys) {
  VerificationOutcome out;
  out.rule.kind = VerificationKind::key_presence;
  out.passed = true;
  std::string missing;
  for (const auto& key : keys) {
    if (!out.rule.target.empty()) out.rule.target += ",";
    out.rule.target += key;
    if (output.find(key) == std::string_view::npos) {
      out.passed = false;
      if (!missing.empty()) missing += ", ";
      missing += "'" + key + "'";
    }
  }
  out.observed = out.passed ? "all keys present" : "missing " + missing;
  out.detail = std::to_string(keys.size()) + " key(s) checked";
  return out;
}

std::optional<std::string> value_after_key(std::string_view output, std::string_view key) {
  if (key.empty()) return std::nullopt;
  const auto pos = output.rfind(key);
  if (pos == std::string_view::npos) return std::nullopt;
  auto i = pos + key.size();
  while (i < output.size() && (output[i] == ' ' || output[i] == '\t')) ++i;
  auto j = i;
  while (j < output.size() && !std::isspace(static_cast<unsigned char>(output[j]))) ++j;
  if (i == j) return std::nullopt;
  return std::string(output.substr(i, j - i));
}

std::vector<std::string> parse_reference_values(std::string_view text) {
  std::vector<std::string> values;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    values.push_back(line.substr(b, e - b + 1));
  }
  return values;
}

std::vector<std::string> read_reference_values(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MetricError("cannot read reference file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_reference_values(buf.str());
}

namespace {

// A literal reference, or the first value of a reference file.
std::string resolve_reference(const std::string& reference, VerificationKind kind,
                              const std::filesystem::path& base_dir) {
  if (kind == VerificationKind::scalar_tolerance && parse_real(reference)) return reference;
  const auto path = std::filesystem::path(reference).is_absolute() ? std::filesystem::path(reference)
                                                                   : base_dir / reference;
  if (std::filesystem::is_regular_file(path)) {
    const auto values = read_reference_values(path);
    if (values.empty()) throw MetricError("reference file '" + path.string() + "' holds no values");
    return values.front();
  }
  if (kind == VerificationKind::scalar_tolerance) {
    throw MetricError("reference '" + reference + "' is neither a number nor a readable file");
  }
  return reference;
}

}  // namespace

VerificationOutcome apply_rule(const VerificationRule& rule, std::string_view output,
                               const std::map<std::string, double>& metrics, const std::filesystem::path& base_dir) {
  VerificationOutcome out;
  out.rule = rule;
  try {
    switch (rule.kind) {
      case VerificationKind::key_presence: {
        auto presence = verify_presence(output, {rule.target});
        presence.rule = rule;
        return presence;
      }
      case VerificationKind::exact_match: {
        const auto expected = resolve_reference(rule.reference.value_or(""), rule.kind, base_dir);
        const auto observed = value_after_key(output, rule.target);
        out.observed = observed.value_or("");
        out.passed = observed && *observed == expected;
        out.detail = observed ? "expected '" + expected + "'" : "key '" + rule.target + "' not found";
        return out;
      }
      case VerificationKind::scalar_tolerance: {
        const auto expected = parse_real(resolve_reference(rule.reference.value_or(""), rule.kind, base_dir));
        if (!expected) throw MetricError("reference value is not a number");
        std::optional<double> observed;
        if (const auto m = metrics.find(rule.target); m != metrics.end()) {
          observed = m->second;
        } else if (const auto text = value_after_key(output, rule.target)) {
          observed = parse_real(*text);
          if (!observed) {
            out.observed = *text;
            out.detail = "value after '" + rule.target + "' is not a number";
            return out;
          }
        }
        if (!observed) {
          out.detail = "target '" + rule.target + "' not found";
          return out;
        }
        auto scalar = verify_scalar(*observed, *expected, rule.rel_tolerance);
        scalar.rule = rule;
        return scalar;
      }
    }
  } catch (const MetricError& e) {
    out.passed = false;
    out.detail = e.what();
  }
  return out;
}

}  // namespace benchkit
