#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "benchkit/metrics.hpp"
#include "benchkit/specmodel.hpp"

namespace benchkit {

class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TemplateError : public EngineError {
 public:
  using EngineError::EngineError;
};

using Assignment = std::map<std::string, std::string>;

struct Workpackage {
  std::string benchmark;
  std::size_t index = 0;  // position in the expansion order
  Assignment assignment;
  TagSet tags;
  int nodes = 1;
  std::filesystem::path workdir;

  bool operator==(const Workpackage&) const = default;
};

struct ExecutionPlan {
  std::string benchmark;
  std::vector<Step> steps;  // topological order, ties by declaration order
  FomSpec fom;
  std::vector<VerificationRule> verification;
};

enum class RunStatus { success, step_failure, verification_failure };

struct StepOutput {
  std::string step;
  std::string command;  // as submitted
  int exit_status = 0;
  std::string stdout_text;
  std::string stderr_text;
  double wall_seconds = 0.0;

  bool operator==(const StepOutput&) const = default;
};

struct RunRecord {
  Workpackage workpackage;
  std::string start_utc;  // RFC 3339
  std::string end_utc;
  double wall_seconds = 0.0;
  RunStatus status = RunStatus::success;
  std::vector<StepOutput> steps;  // steps that ran, in plan order
  std::map<std::string, double> metrics;
  std::vector<VerificationOutcome> verification;

  bool operator==(const RunRecord&) const = default;
};

std::string_view to_string(RunStatus status);
std::optional<RunStatus> run_status_from(std::string_view text);

struct SubmitRequest {
  std::string command;
  int nodes = 1;
  std::vector<std::pair<std::string, std::string>> environment;
  std::filesystem::path workdir;
};

struct SubmitResult {
  int exit_status = 0;
  std::string stdout_text;
  std::string stderr_text;
  double wall_seconds = 0.0;
};

struct BackendCapabilities {
  int max_nodes = 0;     // 0: unbounded
  bool simulated = false;
  int max_parallel = 0;  // 0: unbounded; 1 if submit is not reentrant
};

// Synchronous execution of one rendered command. Implementations that allow
// max_parallel != 1 must accept concurrent submit calls. Throwing
// BackendError marks the step as failed.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendCapabilities capabilities() const = 0;
  virtual SubmitResult submit(const SubmitRequest& request) = 0;
};

class BackendError : public EngineError {
 public:
  using EngineError::EngineError;
};

// Spawns `/bin/sh -c <command>` on the host in the request's working directory.
class LocalBackend : public Backend {
 public:
  explicit LocalBackend(std::vector<std::string> extra_path = {});
  BackendCapabilities capabilities() const override;
  SubmitResult submit(const SubmitRequest& request) override;

 private:
  std::vector<std::string> extra_path_;
};

// Evaluates the bundled workload commands analytically without spawning
// processes. Deterministic for a fixed seed.
class SimulatedBackend : public Backend {
 public:
  explicit SimulatedBackend(std::uint64_t seed = 0, int max_nodes = 0);
  BackendCapabilities capabilities() const override;
  SubmitResult submit(const SubmitRequest& request) override;

 private:
  std::uint64_t seed_;
  int max_nodes_;
};

/// Replaces every `${name}` in a single pass; substituted text is never re-expanded.
std::string render_template(std::string_view text, const Assignment& assignment);

/// Cartesian product of the active literal parameters with templates
/// evaluated per combination.
std::vector<Workpackage> expand_parameters(const BenchmarkSpec& spec, const TagSet& tags);

/// Requested tags plus the tag_overrides of any requested variant.
TagSet effective_tags(const BenchmarkSpec& spec, const TagSet& tags);

ExecutionPlan plan(const BenchmarkSpec& spec);

/// Commands of every plan step rendered for one workpackage.
std::vector<std::string> render_plan(const ExecutionPlan& plan, const Workpackage& workpackage);

/// Sets workdir = run_root / benchmark / index for each workpackage.
void assign_workdirs(std::vector<Workpackage>& workpackages, const std::filesystem::path& run_root);

struct ExecuteOptions {
  int max_parallel = 1;
  PlatformProfile platform = *builtin_platform("local");
  std::filesystem::path reference_dir;  // base for relative reference-file paths
};

/// Runs every workpackage through the plan. A failing step aborts only its
/// own workpackage. Records are returned in workpackage order.
std::vector<RunRecord> execute(const ExecutionPlan& plan, const std::vector<Workpackage>& workpackages,
                               Backend& backend, const ExecuteOptions& options);

/// Current UTC time as RFC 3339 with millisecond precision.
std::string utc_now_rfc3339();

}  // namespace benchkit
