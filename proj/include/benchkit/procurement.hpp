#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "benchkit/specmodel.hpp"

namespace benchkit {

struct SystemModel {
  std::string name;
  std::uint64_t nodes = 1;
  double node_peak_flops = 1.0;  // FP64 FLOP/s
  int devices_per_node = 1;
  std::uint64_t device_memory_bytes = 1;
  double avg_power_watts = 1.0;  // includes cooling
  double capex_currency = 0.0;
  double energy_price_per_kwh = 1.0;
  double lifetime_hours = 1.0;
  double availability = 1.0;

  double peak_flops() const { return static_cast<double>(nodes) * node_peak_flops; }
};

struct ReferenceEntry {
  std::string benchmark;
  int reference_nodes = 8;
  double reference_runtime_seconds = 1.0;
  double weight = 1.0;
  bool high_scaling = false;
};

struct Commitment {
  std::string benchmark;
  double committed_runtime_seconds = 1.0;
  std::uint64_t committed_nodes = 1;
  std::optional<std::string> chosen_variant;
};

// Per-device footprints of the prepared variants at reference scale. Up to
// four variants may be present; footprints grow strictly T < S < M < L.
struct MemoryVariantTable {
  std::map<MemoryVariant, std::uint64_t> footprint_bytes;
  std::uint64_t reference_devices = 1;
  double workload_scale_factor = 1.0;
};

struct BenchmarkScore {
  std::string benchmark;
  double runs_over_lifetime = 0.0;
  double normalized_throughput = 0.0;  // runs / runs of the reference system
  double weight = 0.0;
  double contribution = 0.0;           // weight * normalized_throughput
};

struct EvaluationReport {
  std::string proposal;
  std::vector<BenchmarkScore> benchmarks;
  std::map<std::string, double> high_scaling_ratios;
  double value = 0.0;
  double tco_currency = 0.0;
  double value_for_money = 0.0;
  std::vector<std::string> warnings;
};

class ProcurementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeConstraint { none, power_of_two };

void validate_system(const SystemModel& system);

/// floor(target / node_peak), or the largest power of two not above it.
std::uint64_t size_partition(double target_flops, double node_peak_flops, NodeConstraint constraint);

struct ScaledPartition {
  double target_flops = 0.0;
  std::uint64_t proposal_nodes = 0;
};

/// Scales the reference partition's compute by `scale_factor` and sizes the
/// proposal's node count for that target.
ScaledPartition exascale_partition(std::uint64_t reference_partition_nodes, double reference_node_peak_flops,
                                   double scale_factor, double proposal_node_peak_flops);

/// Per-device footprint of `variant` on the proposal after scale-up.
double scaled_footprint_bytes(const MemoryVariantTable& table, MemoryVariant variant, const SystemModel& proposal,
                              std::uint64_t proposal_partition_nodes);

/// Largest variant whose scaled per-device footprint fits the proposal's device memory.
MemoryVariant select_memory_variant(const MemoryVariantTable& table, const SystemModel& proposal,
                                    std::uint64_t proposal_partition_nodes);

/// 16 * 2^n bytes for an n-qubit complex double state vector.
std::uint64_t statevector_memory(int n_qubits);

/// committed / reference runtime; lower is better.
double high_scaling_ratio(const Commitment& commitment, const ReferenceEntry& reference);

/// capex + energy over the lifetime.
double tco(const SystemModel& system);

/// Executions of a benchmark over a system's available lifetime, with the
/// system packed by `nodes_per_run`-sized jobs.
double runs_over_lifetime(const SystemModel& system, double runtime_seconds, double nodes_per_run);

EvaluationReport evaluate_value_for_money(const std::vector<ReferenceEntry>& references,
                                          const std::vector<Commitment>& commitments, const SystemModel& proposal,
                                          const SystemModel& reference_system);

struct Proposal {
  SystemModel system;
  std::vector<Commitment> commitments;
};

// Contents of a procurement model file.
struct ProcurementModel {
  SystemModel reference_system;
  std::vector<ReferenceEntry> references;
  std::vector<Proposal> proposals;
};

ProcurementModel parse_procurement_model(std::string_view text);

/// Evaluates every proposal; result sorted by value_for_money, best first
/// (ties keep file order).
std::vector<EvaluationReport> rank_proposals(const ProcurementModel& model);

/// Delimiter-separated table: one row per proposal and benchmark.
std::string report_table(const std::vector<EvaluationReport>& reports);
std::string report_summary(const std::vector<EvaluationReport>& reports);

}  // namespace benchkit
