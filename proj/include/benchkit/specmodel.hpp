#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace benchkit {

using TagSet = std::set<std::string>;

// A parameter is either a list of literal values or a template that is
// evaluated against the other parameters of the same workpackage.
struct ParameterDef {
  std::string name;
  std::vector<std::string> values;
  std::optional<std::string> template_text;

  bool is_template() const { return template_text.has_value(); }
  bool operator==(const ParameterDef&) const = default;
};

struct ParameterSet {
  std::string name;
  std::vector<ParameterDef> parameters;  // declaration order
  TagSet active_tags;                    // empty: always active

  bool active_for(const TagSet& tags) const;
  const ParameterDef* find(std::string_view param) const;
  bool operator==(const ParameterSet&) const = default;
};

enum class StepKind { compile, execute, postprocess, verify };

struct Step {
  std::string name;
  std::vector<std::string> depends_on;
  std::string command;
  StepKind kind = StepKind::execute;
  int iterations = 1;

  bool operator==(const Step&) const = default;
};

enum class FomKind { time, rate };

struct FomSpec {
  std::string pattern;
  std::string unit = "s";
  FomKind kind = FomKind::time;
  std::optional<double> work_units;  // required iff kind == rate
  bool lower_is_better = true;

  bool operator==(const FomSpec&) const = default;
};

enum class VerificationKind { scalar_tolerance, exact_match, key_presence };

struct VerificationRule {
  VerificationKind kind = VerificationKind::key_presence;
  std::string target;
  std::optional<std::string> reference;  // literal value or reference-file path
  double rel_tolerance = 0.0;

  bool operator==(const VerificationRule&) const = default;
};

enum class MemoryVariant { tiny, small, medium, large };

struct VariantDef {
  std::string name;
  std::optional<double> memory_fraction;  // canonical variants only
  TagSet tag_overrides;

  bool operator==(const VariantDef&) const = default;
};

enum class BackendKind { local, simulated, external_scheduler };

struct PlatformProfile {
  std::string name;
  BackendKind backend = BackendKind::local;
  std::string submission_template = "${command}";
  std::vector<std::pair<std::string, std::string>> environment;
  int devices_per_node = 1;
  std::uint64_t device_memory_bytes = 40'000'000'000ULL;

  bool operator==(const PlatformProfile&) const = default;
};

struct BenchmarkSpec {
  std::string name;
  std::string description;
  std::vector<ParameterSet> parameter_sets;
  std::vector<Step> steps;
  std::vector<VariantDef> variants;
  FomSpec fom;
  std::vector<VerificationRule> verification;
  int reference_nodes = 8;

  const Step* find_step(std::string_view step) const;
  bool operator==(const BenchmarkSpec&) const = default;
};

struct Finding {
  std::string benchmark;  // may be empty for document-level problems
  std::string message;

  bool operator==(const Finding&) const = default;
};

// Thrown by parse_spec. Carries every finding for the rejected document.
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(std::vector<Finding> findings);
  const std::vector<Finding>& findings() const { return findings_; }

 private:
  std::vector<Finding> findings_;
};

std::string_view to_string(StepKind kind);
std::string_view to_string(FomKind kind);
std::string_view to_string(VerificationKind kind);
std::string_view to_string(BackendKind kind);
std::string_view to_string(MemoryVariant variant);
std::optional<StepKind> step_kind_from(std::string_view text);
std::optional<MemoryVariant> memory_variant_from(std::string_view text);

/// Fraction of per-device memory a canonical variant occupies (0.25 .. 1.0).
double canonical_fraction(MemoryVariant variant);

/// Per-device memory budget of a variant on the given platform.
std::uint64_t variant_budget_bytes(const VariantDef& variant, const PlatformProfile& platform);

/// Parses and validates a benchmark definition document (JSON).
BenchmarkSpec parse_spec(std::string_view text);

/// Canonical JSON form; parse_spec(serialize_spec(s)) == s for valid specs.
std::string serialize_spec(const BenchmarkSpec& spec);

/// Invariant check of a single spec. Empty result means valid.
std::vector<Finding> validate_spec(const BenchmarkSpec& spec);

/// Validates every spec and checks that names are unique within the suite.
std::vector<Finding> validate_suite(const std::vector<BenchmarkSpec>& specs);

PlatformProfile parse_platform(std::string_view text);
std::vector<Finding> validate_platform(const PlatformProfile& platform);

/// Profiles that exist without a platform file: "local" and "simulated".
std::optional<PlatformProfile> builtin_platform(std::string_view name);

/// Placeholder names referenced by `${name}` in a template, in order of first use.
std::vector<std::string> template_references(std::string_view text);

/// Markdown reference of the definition schema.
std::string schema_reference();

}  // namespace benchkit
