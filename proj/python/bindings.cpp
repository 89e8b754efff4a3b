#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "benchkit/engine.hpp"
#include "benchkit/metrics.hpp"
#include "benchkit/procurement.hpp"
#include "benchkit/scaling.hpp"
#include "benchkit/specmodel.hpp"
#include "benchkit/store.hpp"
#include "benchkit/version.hpp"
#include "benchkit/workloads.hpp"

namespace py = pybind11;
using namespace benchkit;

namespace {

ScalingSeries series_from(const std::vector<std::pair<int, double>>& points, int reference_nodes, ScalingMode mode) {
  std::vector<ScalingPoint> pts;
  for (const auto& [n, t] : points) pts.push_back({n, t});
  return make_series("series", mode, std::move(pts), reference_nodes);
}

MemoryVariant variant_arg(const std::string& name) {
  const auto v = memory_variant_from(name);
  if (!v) throw py::value_error("unknown memory variant '" + name + "'");
  return *v;
}

}  // namespace

PYBIND11_MODULE(_benchkit, m) {
  m.doc() = "Benchmark orchestration, scaling analysis and procurement evaluation";
  m.attr("__version__") = kVersion;

  py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);
  py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);
  py::register_exception<ScalingError>(m, "ScalingError", PyExc_ValueError);
  py::register_exception<ProcurementError>(m, "ProcurementError", PyExc_ValueError);
  py::register_exception<EngineError>(m, "EngineError", PyExc_RuntimeError);
  py::register_exception<WorkloadError>(m, "WorkloadError", PyExc_RuntimeError);
  py::register_exception<StoreError>(m, "StoreError", PyExc_RuntimeError);

  // Definitions and engine.
  py::class_<BenchmarkSpec>(m, "BenchmarkSpec")
      .def_readonly("name", &BenchmarkSpec::name)
      .def_readonly("description", &BenchmarkSpec::description)
      .def_readonly("reference_nodes", &BenchmarkSpec::reference_nodes)
      .def_property_readonly("step_names",
                             [](const BenchmarkSpec& s) {
                               std::vector<std::string> names;
                               for (const auto& st : s.steps) names.push_back(st.name);
                               return names;
                             })
      .def("__eq__", [](const BenchmarkSpec& a, const BenchmarkSpec& b) { return a == b; })
      .def("__repr__", [](const BenchmarkSpec& s) { return "<BenchmarkSpec " + s.name + ">"; });

  m.def("parse_spec", &parse_spec, py::arg("text"));
  m.def("serialize_spec", &serialize_spec, py::arg("spec"));
  m.def(
      "validate_suite",
      [](const std::vector<BenchmarkSpec>& specs) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& f : validate_suite(specs)) out.emplace_back(f.benchmark, f.message);
        return out;
      },
      py::arg("specs"));
  m.def("schema_reference", &schema_reference);
  m.def("render_template", &render_template, py::arg("text"), py::arg("assignment"));
  m.def(
      "expand_parameters",
      [](const BenchmarkSpec& spec, const std::vector<std::string>& tags) {
        std::vector<std::pair<int, Assignment>> out;
        for (const auto& wp : expand_parameters(spec, TagSet(tags.begin(), tags.end()))) {
          out.emplace_back(wp.nodes, wp.assignment);
        }
        return out;
      },
      py::arg("spec"), py::arg("tags") = std::vector<std::string>{},
      "List of (nodes, assignment) pairs in expansion order.");
  m.def(
      "plan",
      [](const BenchmarkSpec& spec) {
        std::vector<std::string> names;
        for (const auto& s : plan(spec).steps) names.push_back(s.name);
        return names;
      },
      py::arg("spec"), "Step names in execution order.");

  // Metrics.
  m.def(
      "extract_fom",
      [](const std::string& output, const std::string& pattern) {
        FomSpec fom;
        fom.pattern = pattern;
        return extract_metrics(output, fom).value;
      },
      py::arg("output"), py::arg("pattern"), "Value captured by the last match of `pattern`.");
  m.def(
      "normalize_rate",
      [](double rate, double work_units) {
        FomSpec fom;
        fom.kind = FomKind::rate;
        fom.work_units = work_units;
        return normalize_fom(Metric{"fom", rate, "", MetricKind::rate}, fom);
      },
      py::arg("rate"), py::arg("work_units"));
  m.def(
      "verify_scalar",
      [](double observed, double reference, double rel_tolerance) {
        return verify_scalar(observed, reference, rel_tolerance).passed;
      },
      py::arg("observed"), py::arg("reference"), py::arg("rel_tolerance"));
  m.def(
      "verify_presence",
      [](const std::string& output, const std::vector<std::string>& keys) { return verify_presence(output, keys).passed; },
      py::arg("output"), py::arg("keys"));

  // Scaling.
  py::class_<AmdahlFit>(m, "AmdahlFit")
      .def_readonly("serial_seconds", &AmdahlFit::serial_seconds)
      .def_readonly("parallel_seconds", &AmdahlFit::parallel_seconds)
      .def_readonly("residual", &AmdahlFit::residual)
      .def("predict", &AmdahlFit::predict);
  m.def(
      "relative_series",
      [](const std::vector<std::pair<int, double>>& points, int reference_nodes) {
        std::vector<std::pair<double, double>> out;
        for (const auto& p : relative_series(series_from(points, reference_nodes, ScalingMode::strong))) {
          out.emplace_back(p.nodes, p.runtime);
        }
        return out;
      },
      py::arg("points"), py::arg("reference_nodes"));
  m.def(
      "strong_speedup_efficiency",
      [](const std::vector<std::pair<int, double>>& points, int reference_nodes) {
        std::vector<std::tuple<int, double, double>> out;
        for (const auto& p : strong_speedup_efficiency(series_from(points, reference_nodes, ScalingMode::strong))) {
          out.emplace_back(p.nodes, p.speedup, p.efficiency);
        }
        return out;
      },
      py::arg("points"), py::arg("reference_nodes"));
  m.def(
      "weak_efficiency",
      [](const std::vector<std::pair<int, double>>& points, int reference_nodes) {
        std::vector<std::pair<int, double>> out;
        for (const auto& p : weak_efficiency(series_from(points, reference_nodes, ScalingMode::weak))) {
          out.emplace_back(p.nodes, p.efficiency);
        }
        return out;
      },
      py::arg("points"), py::arg("reference_nodes"));
  m.def(
      "fit_amdahl",
      [](const std::vector<std::pair<int, double>>& points) {
        int smallest = points.empty() ? 1 : points.front().first;
        for (const auto& p : points) smallest = std::min(smallest, p.first);
        return fit_amdahl(series_from(points, smallest, ScalingMode::strong));
      },
      py::arg("points"));

  // Procurement.
  py::class_<SystemModel>(m, "SystemModel")
      .def(py::init<>())
      .def_readwrite("name", &SystemModel::name)
      .def_readwrite("nodes", &SystemModel::nodes)
      .def_readwrite("node_peak_flops", &SystemModel::node_peak_flops)
      .def_readwrite("devices_per_node", &SystemModel::devices_per_node)
      .def_readwrite("device_memory_bytes", &SystemModel::device_memory_bytes)
      .def_readwrite("avg_power_watts", &SystemModel::avg_power_watts)
      .def_readwrite("capex_currency", &SystemModel::capex_currency)
      .def_readwrite("energy_price_per_kwh", &SystemModel::energy_price_per_kwh)
      .def_readwrite("lifetime_hours", &SystemModel::lifetime_hours)
      .def_readwrite("availability", &SystemModel::availability)
      .def("peak_flops", &SystemModel::peak_flops);
  py::class_<ReferenceEntry>(m, "ReferenceEntry")
      .def(py::init([](std::string benchmark, int nodes, double runtime, double weight, bool high_scaling) {
             return ReferenceEntry{std::move(benchmark), nodes, runtime, weight, high_scaling};
           }),
           py::arg("benchmark"), py::arg("reference_nodes"), py::arg("reference_runtime_seconds"),
           py::arg("weight") = 1.0, py::arg("high_scaling") = false)
      .def_readwrite("benchmark", &ReferenceEntry::benchmark)
      .def_readwrite("reference_nodes", &ReferenceEntry::reference_nodes)
      .def_readwrite("reference_runtime_seconds", &ReferenceEntry::reference_runtime_seconds)
      .def_readwrite("weight", &ReferenceEntry::weight)
      .def_readwrite("high_scaling", &ReferenceEntry::high_scaling);
  py::class_<Commitment>(m, "Commitment")
      .def(py::init([](std::string benchmark, double runtime, std::uint64_t nodes) {
             return Commitment{std::move(benchmark), runtime, nodes, std::nullopt};
           }),
           py::arg("benchmark"), py::arg("committed_runtime_seconds"), py::arg("committed_nodes"))
      .def_readwrite("benchmark", &Commitment::benchmark)
      .def_readwrite("committed_runtime_seconds", &Commitment::committed_runtime_seconds)
      .def_readwrite("committed_nodes", &Commitment::committed_nodes);
  py::class_<EvaluationReport>(m, "EvaluationReport")
      .def_readonly("proposal", &EvaluationReport::proposal)
      .def_readonly("value", &EvaluationReport::value)
      .def_readonly("tco", &EvaluationReport::tco_currency)
      .def_readonly("value_for_money", &EvaluationReport::value_for_money)
      .def_readonly("high_scaling_ratios", &EvaluationReport::high_scaling_ratios)
      .def_readonly("warnings", &EvaluationReport::warnings)
      .def_property_readonly("normalized_throughput", [](const EvaluationReport& r) {
        std::map<std::string, double> out;
        for (const auto& b : r.benchmarks) out[b.benchmark] = b.normalized_throughput;
        return out;
      });

  m.def(
      "size_partition",
      [](double target, double node_peak, bool power_of_two) {
        return size_partition(target, node_peak, power_of_two ? NodeConstraint::power_of_two : NodeConstraint::none);
      },
      py::arg("target_flops"), py::arg("node_peak_flops"), py::arg("power_of_two") = false);
  m.def(
      "exascale_partition",
      [](std::uint64_t nodes, double ref_peak, double scale, double proposal_peak) {
        const auto p = exascale_partition(nodes, ref_peak, scale, proposal_peak);
        return std::make_pair(p.target_flops, p.proposal_nodes);
      },
      py::arg("reference_partition_nodes"), py::arg("reference_node_peak_flops"), py::arg("scale_factor"),
      py::arg("proposal_node_peak_flops"));
  m.def(
      "select_memory_variant",
      [](const std::map<std::string, std::uint64_t>& footprints, std::uint64_t reference_devices, double scale,
         const SystemModel& proposal, std::uint64_t partition_nodes) {
        MemoryVariantTable table;
        for (const auto& [name, bytes] : footprints) table.footprint_bytes[variant_arg(name)] = bytes;
        table.reference_devices = reference_devices;
        table.workload_scale_factor = scale;
        return std::string(to_string(select_memory_variant(table, proposal, partition_nodes)));
      },
      py::arg("footprints"), py::arg("reference_devices"), py::arg("workload_scale_factor"), py::arg("proposal"),
      py::arg("proposal_partition_nodes"));
  m.def(
      "variant_budget_bytes",
      [](const std::string& variant, std::uint64_t device_memory_bytes) {
        PlatformProfile p;
        p.device_memory_bytes = device_memory_bytes;
        return variant_budget_bytes(VariantDef{variant, canonical_fraction(variant_arg(variant)), {}}, p);
      },
      py::arg("variant"), py::arg("device_memory_bytes"));
  m.def("statevector_memory", &statevector_memory, py::arg("n_qubits"));
  m.def("high_scaling_ratio", &high_scaling_ratio, py::arg("commitment"), py::arg("reference"));
  m.def("tco", &tco, py::arg("system"));
  m.def("evaluate_value_for_money", &evaluate_value_for_money, py::arg("references"), py::arg("commitments"),
        py::arg("proposal"), py::arg("reference_system"));
  m.def(
      "evaluate_model",
      [](const std::string& text) { return rank_proposals(parse_procurement_model(text)); }, py::arg("text"),
      "Ranks the proposals of a procurement model document, best first.");

  // Continuous benchmarking.
  m.def(
      "median_baseline",
      [](const std::vector<double>& history, int window) {
        std::vector<StoredRecord> records;
        for (std::size_t i = 0; i < history.size(); ++i) {
          StoredRecord r;
          r.run_id = std::to_string(i);
          r.record.workpackage.benchmark = "b";
          r.record.metrics["time_s"] = history[i];
          records.push_back(std::move(r));
        }
        return compute_baseline(records, "b", {}, 1, window).baseline_seconds;
      },
      py::arg("runtimes"), py::arg("window") = kDefaultWindow,
      "Median of the most recent `window` runtimes (oldest first).");
  m.def(
      "classify_slowdown", [](double slowdown, double threshold) { return std::string(to_string(classify_slowdown(slowdown, threshold))); },
      py::arg("slowdown"), py::arg("threshold") = kDefaultThreshold);

  // Workloads.
  m.def(
      "amdahl_time",
      [](double serial, double parallel, int nodes, double noise, std::uint64_t seed) {
        return amdahl_time(AmdahlConfig{serial, parallel, noise, seed}, nodes);
      },
      py::arg("serial_seconds"), py::arg("parallel_seconds"), py::arg("nodes"), py::arg("noise_fraction") = 0.0,
      py::arg("seed") = 0);
  m.def("pair_bisection", &pair_bisection, py::arg("process_count"));
  m.def(
      "run_triad",
      [](std::size_t length, int repetitions) {
        const auto r = run_triad(TriadConfig{length, repetitions, 3.0});
        return std::make_pair(r.bytes_per_second, r.verified);
      },
      py::arg("array_length"), py::arg("repetitions"));
}
