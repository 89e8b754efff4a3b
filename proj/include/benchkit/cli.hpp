#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "benchkit/scaling.hpp"
#include "benchkit/specmodel.hpp"

namespace benchkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // benchmark or regression failure
inline constexpr int kExitUsage = 2;    // usage or definition error

struct GlobalOptions {
  std::filesystem::path definitions = "definitions";
  std::string platform = "local";
  TagSet tags;
  std::optional<std::filesystem::path> store;  // default: <output_dir>/store.ndjson
  std::filesystem::path output_dir = "bench-out";
  std::uint64_t seed = 0;
  int max_parallel = 1;
  std::vector<std::string> tool_dirs;  // prepended to PATH for the local backend

  std::filesystem::path store_path() const { return store ? *store : output_dir / "store.ndjson"; }
};

struct CommandOutcome {
  int exit_status = kExitOk;
  std::string summary;
  std::vector<std::filesystem::path> artifacts;
};

struct AnalyzeOptions {
  std::string benchmark;
  ScalingMode mode = ScalingMode::strong;
  std::optional<int> reference_nodes;  // default: smallest node count
  int window = 5;
};

/// Parsed definitions from a file or every `*.bench.json` in a directory
/// (sorted by file name). Throws SpecError.
std::vector<BenchmarkSpec> load_definitions(const std::filesystem::path& path);

/// Builtin profile, or `<name>.platform.json` under the definitions directory
/// (or its `platforms/` subdirectory).
PlatformProfile load_platform(const std::string& name, const std::filesystem::path& definitions);

CommandOutcome cmd_run(const GlobalOptions& options, const std::vector<std::string>& benchmarks = {});
CommandOutcome cmd_analyze(const GlobalOptions& options, const AnalyzeOptions& analyze);
CommandOutcome cmd_evaluate(const GlobalOptions& options, const std::filesystem::path& model_file);
CommandOutcome cmd_report(const GlobalOptions& options);
CommandOutcome cmd_ci_check(const GlobalOptions& options, int window, double threshold);
CommandOutcome cmd_validate(const GlobalOptions& options);

/// Full command-line entry point; returns the process exit status.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace benchkit
