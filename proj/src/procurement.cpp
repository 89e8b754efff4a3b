#include "benchkit/procurement.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "benchkit/numbers.hpp"

namespace benchkit {

namespace {

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

void validate_system(const SystemModel& s) {
  const auto bad = [&](const std::string& what) { throw ProcurementError("system '" + s.name + "': " + what); };
  if (s.nodes < 1) bad("nodes must be positive");
  if (!positive(s.node_peak_flops)) bad("node_peak_flops must be positive");
  if (s.devices_per_node < 1) bad("devices_per_node must be positive");
  if (s.device_memory_bytes < 1) bad("device_memory_bytes must be positive");
  if (!positive(s.avg_power_watts)) bad("avg_power_watts must be positive");
  if (!(s.capex_currency >= 0.0) || !std::isfinite(s.capex_currency)) bad("capex_currency must be non-negative");
  if (!positive(s.energy_price_per_kwh)) bad("energy_price_per_kwh must be positive");
  if (!(s.lifetime_hours >= 0.0) || !std::isfinite(s.lifetime_hours)) bad("lifetime_hours must be non-negative");
  if (!(s.availability > 0.0 && s.availability <= 1.0)) bad("availability must be in (0, 1]");
}

std::uint64_t size_partition(double target_flops, double node_peak_flops, NodeConstraint constraint) {
  if (!positive(target_flops) || !positive(node_peak_flops)) {
    throw ProcurementError("partition sizing needs positive FLOP/s figures");
  }
  if (target_flops < node_peak_flops) throw ProcurementError("target is below one node's peak: empty partition");
  const auto quotient = std::floor(target_flops / node_peak_flops);
  if (quotient >= 0x1p63) throw ProcurementError("partition size overflows");
  const auto nodes = static_cast<std::uint64_t>(quotient);
  return constraint == NodeConstraint::power_of_two ? std::bit_floor(nodes) : nodes;
}

ScaledPartition exascale_partition(std::uint64_t reference_partition_nodes, double reference_node_peak_flops,
                                   double scale_factor, double proposal_node_peak_flops) {
  if (!positive(scale_factor)) throw ProcurementError("scale factor must be positive");
  ScaledPartition out;
  out.target_flops = static_cast<double>(reference_partition_nodes) * reference_node_peak_flops * scale_factor;
  out.proposal_nodes = size_partition(out.target_flops, proposal_node_peak_flops, NodeConstraint::none);
  return out;
}

double scaled_footprint_bytes(const MemoryVariantTable& table, MemoryVariant variant, const SystemModel& proposal,
                              std::uint64_t proposal_partition_nodes) {
  const auto it = table.footprint_bytes.find(variant);
  if (it == table.footprint_bytes.end()) {
    throw ProcurementError("variant '" + std::string(to_string(variant)) + "' is not prepared");
  }
  const auto proposal_devices =
      static_cast<double>(proposal_partition_nodes) * static_cast<double>(proposal.devices_per_node);
  if (!(proposal_devices > 0.0)) throw ProcurementError("proposal partition has no devices");
  return static_cast<double>(it->second) * (table.workload_scale_factor * static_cast<double>(table.reference_devices)) /
         proposal_devices;
}

MemoryVariant select_memory_variant(const MemoryVariantTable& table, const SystemModel& proposal,
                                    std::uint64_t proposal_partition_nodes) {
  if (table.footprint_bytes.empty()) throw ProcurementError("memory variant table is empty");
  if (table.reference_devices < 1 || !positive(table.workload_scale_factor)) {
    throw ProcurementError("memory variant table needs positive reference devices and scale factor");
  }
  std::uint64_t previous = 0;
  for (const auto& [variant, bytes] : table.footprint_bytes) {
    if (bytes <= previous) throw ProcurementError("variant footprints must increase strictly T < S < M < L");
    previous = bytes;
  }

  std::optional<MemoryVariant> best;
  for (const auto& [variant, bytes] : table.footprint_bytes) {
    if (scaled_footprint_bytes(table, variant, proposal, proposal_partition_nodes) <=
        static_cast<double>(proposal.device_memory_bytes)) {
      best = variant;
    }
  }
  if (!best) throw ProcurementError("no memory variant fits the proposal's device memory");
  return *best;
}

std::uint64_t statevector_memory(int n_qubits) {
  if (n_qubits < 1) throw ProcurementError("qubit count must be positive");
  // 16 * 2^n = 2^(n+4) must fit in 64 bits.
  if (n_qubits > 59) throw ProcurementError("state vector size overflows 64-bit byte count");
  return std::uint64_t{1} << (n_qubits + 4);
}

double high_scaling_ratio(const Commitment& commitment, const ReferenceEntry& reference) {
  if (!positive(commitment.committed_runtime_seconds) || !positive(reference.reference_runtime_seconds)) {
    throw ProcurementError("runtimes must be positive");
  }
  return commitment.committed_runtime_seconds / reference.reference_runtime_seconds;
}

double tco(const SystemModel& system) {
  return system.capex_currency +
         (system.avg_power_watts / 1000.0) * system.lifetime_hours * system.availability * system.energy_price_per_kwh;
}

double runs_over_lifetime(const SystemModel& system, double runtime_seconds, double nodes_per_run) {
  if (!positive(runtime_seconds) || !positive(nodes_per_run)) {
    throw ProcurementError("runtime and node count per run must be positive");
  }
  return (system.lifetime_hours * 3600.0 * system.availability / runtime_seconds) *
         (static_cast<double>(system.nodes) / nodes_per_run);
}

EvaluationReport evaluate_value_for_money(const std::vector<ReferenceEntry>& references,
                                          const std::vector<Commitment>& commitments, const SystemModel& proposal,
                                          const SystemModel& reference_system) {
  validate_system(proposal);
  validate_system(reference_system);
  if (!(reference_system.lifetime_hours > 0.0)) {
    throw ProcurementError("reference system needs a positive lifetime to normalize throughput");
  }

  EvaluationReport report;
  report.proposal = proposal.name;
  for (const auto& ref : references) {
    if (!(ref.weight >= 0.0) || !std::isfinite(ref.weight)) {
      throw ProcurementError("benchmark '" + ref.benchmark + "': weight must be non-negative");
    }
    if (ref.reference_nodes < 1 || !positive(ref.reference_runtime_seconds)) {
      throw ProcurementError("benchmark '" + ref.benchmark + "': reference runtime and nodes must be positive");
    }
    const auto c = std::find_if(commitments.begin(), commitments.end(),
                                [&](const Commitment& x) { return x.benchmark == ref.benchmark; });
    if (c == commitments.end()) {
      throw ProcurementError("proposal '" + proposal.name + "' has no commitment for '" + ref.benchmark + "'");
    }
    if (c->committed_nodes < 1 || !positive(c->committed_runtime_seconds)) {
      throw ProcurementError("commitment for '" + ref.benchmark + "': runtime and nodes must be positive");
    }

    BenchmarkScore score;
    score.benchmark = ref.benchmark;
    score.weight = ref.weight;
    score.runs_over_lifetime =
        runs_over_lifetime(proposal, c->committed_runtime_seconds, static_cast<double>(c->committed_nodes));
    const auto reference_runs =
        runs_over_lifetime(reference_system, ref.reference_runtime_seconds, static_cast<double>(ref.reference_nodes));
    score.normalized_throughput = score.runs_over_lifetime / reference_runs;
    score.contribution = score.weight * score.normalized_throughput;
    report.value += score.contribution;
    report.benchmarks.push_back(std::move(score));
    if (ref.high_scaling) report.high_scaling_ratios[ref.benchmark] = high_scaling_ratio(*c, ref);
  }

  report.tco_currency = tco(proposal);
  if (!(report.tco_currency > 0.0)) throw ProcurementError("proposal '" + proposal.name + "' has zero TCO");
  if (report.value == 0.0) report.warnings.push_back("value is 0: every benchmark weight is zero");
  report.value_for_money = report.value / report.tco_currency;
  return report;
}

namespace {

using ojson = nlohmann::ordered_json;

void check_fields(const ojson& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ProcurementError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ProcurementError(where + ": unknown field '" + key + "'");
    }
  }
}

template <typename T>
T required(const ojson& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ProcurementError(where + ": missing field '" + key + "'");
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ProcurementError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const ojson& j, const char* key, const std::string& where, T fallback) {
  return j.contains(key) ? required<T>(j, key, where) : fallback;
}

std::uint64_t count_field(const ojson& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ProcurementError(where + ": missing field '" + key + "'");
  if (!j[key].is_number_unsigned()) throw ProcurementError(where + ": '" + key + "' must be a positive integer");
  return j[key].get<std::uint64_t>();
}

SystemModel parse_system(const ojson& j, const std::string& where) {
  check_fields(j,
               {"name", "nodes", "node_peak_flops", "devices_per_node", "device_memory_bytes", "avg_power_watts",
                "capex_currency", "energy_price_per_kwh", "lifetime_hours", "availability"},
               where);
  SystemModel s;
  s.name = required<std::string>(j, "name", where);
  s.nodes = count_field(j, "nodes", where);
  s.node_peak_flops = required<double>(j, "node_peak_flops", where);
  s.devices_per_node = static_cast<int>(count_field(j, "devices_per_node", where));
  s.device_memory_bytes = count_field(j, "device_memory_bytes", where);
  s.avg_power_watts = required<double>(j, "avg_power_watts", where);
  s.capex_currency = required<double>(j, "capex_currency", where);
  s.energy_price_per_kwh = required<double>(j, "energy_price_per_kwh", where);
  s.lifetime_hours = required<double>(j, "lifetime_hours", where);
  s.availability = optional_field<double>(j, "availability", where, 1.0);
  validate_system(s);
  return s;
}

}  // namespace

ProcurementModel parse_procurement_model(std::string_view text) {
  ojson doc;
  try {
    doc = ojson::parse(text.begin(), text.end());
  } catch (const ojson::parse_error& e) {
    throw ProcurementError(std::string("syntax error: ") + e.what());
  }
  check_fields(doc, {"reference_system", "references", "proposals"}, "model");
  ProcurementModel model;
  if (!doc.contains("reference_system")) throw ProcurementError("model: missing field 'reference_system'");
  model.reference_system = parse_system(doc["reference_system"], "reference_system");

  if (!doc.contains("references") || !doc["references"].is_array()) {
    throw ProcurementError("model: 'references' must be a list");
  }
  for (const auto& r : doc["references"]) {
    const std::string where = "references";
    check_fields(r, {"benchmark", "reference_nodes", "reference_runtime_seconds", "weight", "high_scaling"}, where);
    ReferenceEntry e;
    e.benchmark = required<std::string>(r, "benchmark", where);
    e.reference_nodes = static_cast<int>(count_field(r, "reference_nodes", where));
    e.reference_runtime_seconds = required<double>(r, "reference_runtime_seconds", where);
    e.weight = optional_field<double>(r, "weight", where, 1.0);
    e.high_scaling = optional_field<bool>(r, "high_scaling", where, false);
    if (e.reference_nodes < 1 || !positive(e.reference_runtime_seconds) || !(e.weight >= 0.0)) {
      throw ProcurementError("reference '" + e.benchmark + "': invalid runtime, nodes or weight");
    }
    model.references.push_back(std::move(e));
  }

  if (!doc.contains("proposals") || !doc["proposals"].is_array()) {
    throw ProcurementError("model: 'proposals' must be a list");
  }
  for (const auto& p : doc["proposals"]) {
    check_fields(p, {"system", "commitments"}, "proposal");
    Proposal proposal;
    if (!p.contains("system")) throw ProcurementError("proposal: missing field 'system'");
    proposal.system = parse_system(p["system"], "proposal system");
    if (!p.contains("commitments") || !p["commitments"].is_array()) {
      throw ProcurementError("proposal '" + proposal.system.name + "': 'commitments' must be a list");
    }
    for (const auto& c : p["commitments"]) {
      const std::string where = "commitment";
      check_fields(c, {"benchmark", "committed_runtime_seconds", "committed_nodes", "chosen_variant"}, where);
      Commitment commitment;
      commitment.benchmark = required<std::string>(c, "benchmark", where);
      commitment.committed_runtime_seconds = required<double>(c, "committed_runtime_seconds", where);
      commitment.committed_nodes = count_field(c, "committed_nodes", where);
      if (c.contains("chosen_variant")) {
        commitment.chosen_variant = required<std::string>(c, "chosen_variant", where);
        if (!memory_variant_from(*commitment.chosen_variant)) {
          throw ProcurementError("commitment '" + commitment.benchmark + "': unknown variant '" +
                                 *commitment.chosen_variant + "'");
        }
      }
      if (!positive(commitment.committed_runtime_seconds) || commitment.committed_nodes < 1) {
        throw ProcurementError("commitment '" + commitment.benchmark + "': runtime and nodes must be positive");
      }
      proposal.commitments.push_back(std::move(commitment));
    }
    model.proposals.push_back(std::move(proposal));
  }
  if (model.proposals.empty()) throw ProcurementError("model lists no proposals");
  return model;
}

std::vector<EvaluationReport> rank_proposals(const ProcurementModel& model) {
  std::vector<EvaluationReport> reports;
  for (const auto& p : model.proposals) {
    reports.push_back(evaluate_value_for_money(model.references, p.commitments, p.system, model.reference_system));
  }
  std::stable_sort(reports.begin(), reports.end(),
                   [](const auto& a, const auto& b) { return a.value_for_money > b.value_for_money; });
  return reports;
}

std::string report_table(const std::vector<EvaluationReport>& reports) {
  std::string out = "rank,proposal,benchmark,weight,runs_over_lifetime,normalized_throughput,contribution,"
                    "high_scaling_ratio,value,tco,value_for_money\n";
  std::size_t rank = 0;
  for (const auto& r : reports) {
    ++rank;
    for (const auto& b : r.benchmarks) {
      const auto hs = r.high_scaling_ratios.find(b.benchmark);
      out += std::to_string(rank) + "," + r.proposal + "," + b.benchmark + "," + format_real(b.weight) + "," +
             format_real(b.runs_over_lifetime) + "," + format_real(b.normalized_throughput) + "," +
             format_real(b.contribution) + "," + (hs == r.high_scaling_ratios.end() ? "" : format_real(hs->second)) +
             "," + format_real(r.value) + "," + format_real(r.tco_currency) + "," + format_real(r.value_for_money) +
             "\n";
    }
  }
  return out;
}

std::string report_summary(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  std::size_t rank = 0;
  for (const auto& r : reports) {
    out << ++rank << ". " << r.proposal << ": value-for-money " << format_real(r.value_for_money) << " (value "
        << format_real(r.value) << ", TCO " << format_real(r.tco_currency) << ")\n";
    for (const auto& [bench, ratio] : r.high_scaling_ratios) {
      out << "   high-scaling " << bench << ": committed/reference " << format_real(ratio) << "\n";
    }
    for (const auto& w : r.warnings) out << "   warning: " << w << "\n";
  }
  return out.str();
}

}  // namespace benchkit
