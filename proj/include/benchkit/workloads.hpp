#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace benchkit {

class WorkloadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reported time = serial + parallel / N * (1 + u), u uniform in [-noise, +noise].
struct AmdahlConfig {
  double serial_seconds = 1.0;
  double parallel_seconds = 8.0;
  double noise_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct TriadConfig {
  std::size_t array_length = 1 << 20;
  int repetitions = 10;
  double scalar = 3.0;
};

struct BisectionConfig {
  int process_count = 2;
  std::size_t message_bytes = 16ull << 20;
  int repetitions = 4;
  bool bidirectional = true;
  double timeout_seconds = 30.0;
};

struct TriadResult {
  double seconds = 0.0;
  double bytes_per_second = 0.0;
  bool verified = false;
};

struct PairBandwidth {
  int first = 0;
  int second = 0;
  double bytes = 0.0;
  double seconds = 0.0;
  double bytes_per_second = 0.0;
};

struct BisectionResult {
  std::vector<PairBandwidth> pairs;
  double min_bytes_per_second = 0.0;
};

enum class AmdahlMode { sleep, compute };

/// Modeled runtime; deterministic in (config, nodes).
double amdahl_time(const AmdahlConfig& config, int nodes);

/// Sleeps (or only computes) the modeled runtime and returns the FOM line
/// "FOM: time=<seconds> s".
std::string run_amdahl(const AmdahlConfig& config, int nodes, AmdahlMode mode);

/// Pairs (i, i + P/2) for i in [0, P/2).
std::vector<std::pair<int, int>> pair_bisection(int process_count);

/// Minimum of the per-pair bandwidths.
double bisection_minimum(const std::vector<PairBandwidth>& pairs);

/// Exchanges messages between partner endpoints over loopback TCP, all pairs
/// concurrently.
BisectionResult run_bisection(const BisectionConfig& config);

/// a[i] = b[i] + s * c[i] with b[i] = i, c[i] = 1; verified against the closed form.
TriadResult run_triad(const TriadConfig& config);

/// Fills the triad arrays and performs `repetitions` sweeps into `a`.
void triad_kernel(std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c, double scalar,
                  int repetitions);
bool triad_verify(const std::vector<double>& a, double scalar);

// `--key value` / `--flag` style options shared by the workload executables
// and the simulated backend.
using WorkloadArgs = std::map<std::string, std::string>;

WorkloadArgs parse_workload_args(const std::vector<std::string>& args);
AmdahlConfig amdahl_config_from(const WorkloadArgs& args);
TriadConfig triad_config_from(const WorkloadArgs& args);
BisectionConfig bisection_config_from(const WorkloadArgs& args);

/// Node count: --nodes, else BENCH_NODES, else 1.
int workload_nodes(const WorkloadArgs& args);

std::string format_triad(const TriadResult& result);
std::string format_bisection(const BisectionResult& result);

/// Splits a command line into words (single/double quotes and backslash escapes).
std::vector<std::string> split_command(std::string_view command);

struct SimulatedRun {
  int exit_status = 0;
  std::string stdout_text;
  std::string stderr_text;
  double seconds = 0.0;
};

/// Analytic evaluation of a bundled workload command line, or nullopt when the
/// program is not one of bench-amdahl, bench-triad, bench-bisection.
std::optional<SimulatedRun> simulate_workload(const std::vector<std::string>& argv, int nodes, std::uint64_t seed);

/// splitmix64 step, used to derive reproducible streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Uniform value in [0, 1) from a 64-bit state, independent of the standard library.
double unit_interval(std::uint64_t bits);

}  // namespace benchkit
