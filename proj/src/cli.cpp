#include "benchkit/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "benchkit/engine.hpp"
#include "benchkit/numbers.hpp"
#include "benchkit/procurement.hpp"
#include "benchkit/store.hpp"
#include "benchkit/version.hpp"

namespace benchkit {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string join_tags(const TagSet& tags) {
  std::string out;
  for (const auto& t : tags) {
    if (!out.empty()) out += ';';
    out += t;
  }
  return out.empty() ? "-" : out;
}

CommandOutcome usage_error(const std::string& message) { return {kExitUsage, "error: " + message + "\n", {}}; }

// Fixed-width rendering of a delimiter-separated table.
std::string align_table(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  std::vector<std::size_t> width;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (width.size() < cells.size()) width.resize(cells.size(), 0);
    for (std::size_t i = 0; i < cells.size(); ++i) width[i] = std::max(width[i], cells[i].size());
    rows.push_back(std::move(cells));
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out << std::left << std::setw(static_cast<int>(width[i]) + (i + 1 < r.size() ? 2 : 0)) << r[i];
    }
    out << '\n';
  }
  return out.str();
}

std::string new_run_id(const fs::path& runs_root) {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  for (int n = 0;; ++n) {
    auto id = std::string(stamp) + "-" + std::to_string(n);
    if (!fs::exists(runs_root / id)) return id;
  }
}

std::string fingerprint(const PlatformProfile& platform, std::uint64_t seed) {
  if (platform.backend == BackendKind::simulated) return "simulated:seed=" + std::to_string(seed);
  char host[256] = {};
  ::gethostname(host, sizeof host - 1);
  return std::string(to_string(platform.backend)) + ":" + platform.name + "@" + host;
}

}  // namespace

std::vector<BenchmarkSpec> load_definitions(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && ends_with(entry.path().filename().string(), ".bench.json")) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(path)) {
    files.push_back(path);
  } else {
    throw SpecError({Finding{"", "definitions path '" + path.string() + "' does not exist"}});
  }

  std::vector<BenchmarkSpec> specs;
  std::vector<Finding> findings;
  for (const auto& f : files) {
    try {
      specs.push_back(parse_spec(read_text(f)));
    } catch (const SpecError& e) {
      for (auto finding : e.findings()) {
        finding.message = f.filename().string() + ": " + finding.message;
        findings.push_back(std::move(finding));
      }
    }
  }
  if (findings.empty()) {
    for (auto& f : validate_suite(specs)) {
      if (f.message.rfind("duplicate benchmark name", 0) == 0) findings.push_back(std::move(f));
    }
  }
  if (!findings.empty()) throw SpecError(std::move(findings));
  return specs;
}

PlatformProfile load_platform(const std::string& name, const fs::path& definitions) {
  const auto dir = fs::is_directory(definitions) ? definitions : definitions.parent_path();
  for (const auto& candidate : {dir / (name + ".platform.json"), dir / "platforms" / (name + ".platform.json")}) {
    if (fs::is_regular_file(candidate)) {
      auto p = parse_platform(read_text(candidate));
      if (p.name != name) throw SpecError({Finding{name, "platform file declares name '" + p.name + "'"}});
      return p;
    }
  }
  if (auto builtin = builtin_platform(name)) return *builtin;
  throw SpecError({Finding{name, "unknown platform '" + name + "'"}});
}

CommandOutcome cmd_run(const GlobalOptions& options, const std::vector<std::string>& benchmarks) {
  if (options.max_parallel < 1) return usage_error("--max-parallel must be >= 1");

  std::vector<BenchmarkSpec> specs;
  PlatformProfile platform;
  std::vector<std::vector<Workpackage>> expansions;
  try {
    specs = load_definitions(options.definitions);
    if (!benchmarks.empty()) {
      std::vector<BenchmarkSpec> selected;
      for (const auto& name : benchmarks) {
        const auto it = std::find_if(specs.begin(), specs.end(), [&](const auto& s) { return s.name == name; });
        if (it == specs.end()) return usage_error("no definition named '" + name + "'");
        selected.push_back(*it);
      }
      specs = std::move(selected);
    }
    platform = load_platform(options.platform, options.definitions);
    for (const auto& spec : specs) expansions.push_back(expand_parameters(spec, options.tags));
  } catch (const SpecError& e) {
    return usage_error(e.what());
  } catch (const EngineError& e) {
    return usage_error(e.what());
  }

  std::unique_ptr<Backend> backend;
  switch (platform.backend) {
    case BackendKind::local: backend = std::make_unique<LocalBackend>(options.tool_dirs); break;
    case BackendKind::simulated: backend = std::make_unique<SimulatedBackend>(options.seed); break;
    case BackendKind::external_scheduler:
      return usage_error("platform '" + platform.name + "' needs an external scheduler backend, none is available");
  }

  const auto runs_root = options.output_dir / "runs";
  const auto run_id = new_run_id(runs_root);
  const auto run_dir = runs_root / run_id;
  const auto reference_dir = fs::is_directory(options.definitions) ? options.definitions
                                                                   : options.definitions.parent_path();

  std::unique_ptr<Store> opened;
  try {
    opened = std::make_unique<Store>(options.store_path());
  } catch (const StoreError& e) {
    return usage_error(e.what());
  }
  auto& store = *opened;
  std::string table = "benchmark,tags,nodes,fom_s,status\n";
  bool all_passed = true;
  std::size_t total = 0;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    auto& workpackages = expansions[s];
    assign_workdirs(workpackages, run_dir);
    ExecuteOptions exec;
    exec.max_parallel = options.max_parallel;
    exec.platform = platform;
    exec.reference_dir = reference_dir;
    const auto records = execute(plan(specs[s]), workpackages, *backend, exec);
    for (const auto& r : records) {
      StoredRecord stored{r, run_id + "/" + r.workpackage.benchmark + "/" + std::to_string(r.workpackage.index),
                          std::string("benchkit ") + kVersion, fingerprint(platform, options.seed)};
      store.append_record(stored);
      const auto fom = r.metrics.find("time_s");
      table += r.workpackage.benchmark + "," + join_tags(r.workpackage.tags) + "," +
               std::to_string(r.workpackage.nodes) + "," + (fom == r.metrics.end() ? "-" : format_real(fom->second)) +
               "," + std::string(to_string(r.status)) + "\n";
      all_passed = all_passed && r.status == RunStatus::success;
      ++total;
    }
  }

  CommandOutcome outcome;
  const auto results = run_dir / "results.csv";
  write_text(results, table);
  outcome.artifacts = {results, store.path()};
  outcome.exit_status = all_passed ? kExitOk : kExitFailure;
  outcome.summary = align_table(table) + "run " + run_id + ": " + std::to_string(total) + " workpackage(s), " +
                    (all_passed ? "all passed" : "failures present") + "\n";
  return outcome;
}

CommandOutcome cmd_analyze(const GlobalOptions& options, const AnalyzeOptions& analyze) {
  if (analyze.benchmark.empty()) return usage_error("analyze needs --benchmark");
  if (analyze.window < 1) return usage_error("--window must be >= 1");
  const auto path = options.store_path();
  if (!fs::exists(path)) return usage_error("store '" + path.string() + "' does not exist");

  std::vector<StoredRecord> history;
  try {
    history = read_store(path);
  } catch (const StoreError& e) {
    return usage_error(e.what());
  }
  std::set<int> node_counts;
  for (const auto& r : history) {
    const auto& wp = r.record.workpackage;
    if (wp.benchmark == analyze.benchmark && wp.tags == options.tags && r.record.status == RunStatus::success) {
      node_counts.insert(wp.nodes);
    }
  }
  if (node_counts.empty()) {
    return {kExitFailure, "error: no passing records for '" + analyze.benchmark + "' with tags " +
                              join_tags(options.tags) + "\n", {}};
  }
  std::vector<ScalingPoint> points;
  for (const int n : node_counts) {
    points.push_back({n, compute_baseline(history, analyze.benchmark, options.tags, n, analyze.window).baseline_seconds});
  }

  ScalingSeries series;
  try {
    series = make_series(analyze.benchmark, analyze.mode, points, analyze.reference_nodes.value_or(*node_counts.begin()));
  } catch (const ScalingError& e) {
    return usage_error(e.what());
  }

  const auto stem = options.output_dir / "analysis" / (analyze.benchmark + "-" + std::string(to_string(analyze.mode)));
  CommandOutcome outcome;
  const auto series_file = fs::path(stem.string() + "-series.csv");
  write_text(series_file, export_series_csv(series));

  std::string relative = "nodes,runtime_s,relative_nodes,relative_runtime\n";
  const auto rel = relative_series(series);
  for (std::size_t i = 0; i < rel.size(); ++i) {
    relative += std::to_string(series.points[i].nodes) + "," + format_real(series.points[i].runtime_seconds) + "," +
                format_real(rel[i].nodes) + "," + format_real(rel[i].runtime) + "\n";
  }
  const auto relative_file = fs::path(stem.string() + "-relative.csv");
  write_text(relative_file, relative);

  std::string efficiency;
  if (analyze.mode == ScalingMode::strong) {
    efficiency = "nodes,speedup,efficiency\n";
    for (const auto& p : strong_speedup_efficiency(series)) {
      efficiency += std::to_string(p.nodes) + "," + format_real(p.speedup) + "," + format_real(p.efficiency) + "\n";
    }
  } else {
    efficiency = "nodes,efficiency\n";
    for (const auto& p : weak_efficiency(series)) {
      efficiency += std::to_string(p.nodes) + "," + format_real(p.efficiency) + "\n";
    }
  }
  const auto efficiency_file = fs::path(stem.string() + "-efficiency.csv");
  write_text(efficiency_file, efficiency);

  outcome.artifacts = {series_file, relative_file, efficiency_file};
  outcome.summary = align_table(relative) + "\n" + align_table(efficiency);
  if (analyze.mode == ScalingMode::strong && series.points.size() >= 2) {
    const auto fit = fit_amdahl(series);
    outcome.summary += "amdahl fit: serial " + format_real(fit.serial_seconds) + " s, parallel " +
                       format_real(fit.parallel_seconds) + " s, residual " + format_real(fit.residual) + " s\n";
  }
  return outcome;
}

CommandOutcome cmd_evaluate(const GlobalOptions& options, const fs::path& model_file) {
  std::vector<EvaluationReport> reports;
  try {
    reports = rank_proposals(parse_procurement_model(read_text(model_file)));
  } catch (const ProcurementError& e) {
    return usage_error(e.what());
  } catch (const std::runtime_error& e) {
    return usage_error(e.what());
  }
  CommandOutcome outcome;
  const auto table_file = options.output_dir / "evaluation.csv";
  const auto summary_file = options.output_dir / "evaluation.txt";
  const auto summary = report_summary(reports);
  write_text(table_file, report_table(reports));
  write_text(summary_file, summary);
  outcome.artifacts = {table_file, summary_file};
  outcome.summary = summary;
  return outcome;
}

namespace {

struct GroupKey {
  std::string benchmark;
  TagSet tags;
  int nodes;
  auto operator<=>(const GroupKey&) const = default;
};

std::map<GroupKey, std::vector<std::size_t>> group_records(const std::vector<StoredRecord>& history) {
  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& wp = history[i].record.workpackage;
    groups[{wp.benchmark, wp.tags, wp.nodes}].push_back(i);
  }
  return groups;
}

}  // namespace

CommandOutcome cmd_report(const GlobalOptions& options) {
  const auto path = options.store_path();
  std::vector<StoredRecord> history;
  try {
    history = read_store(path);
  } catch (const StoreError& e) {
    return usage_error(e.what());
  }
  std::string table = "benchmark,tags,nodes,runs,passing,latest_status,latest_time_s,median_time_s\n";
  for (const auto& [key, indices] : group_records(history)) {
    const auto& latest = history[indices.back()].record;
    const auto passing = std::count_if(indices.begin(), indices.end(),
                                       [&](std::size_t i) { return history[i].record.status == RunStatus::success; });
    std::string median = "-";
    if (passing > 0) {
      median = format_real(compute_baseline(history, key.benchmark, key.tags, key.nodes,
                                            static_cast<int>(indices.size()))
                               .baseline_seconds);
    }
    table += key.benchmark + "," + join_tags(key.tags) + "," + std::to_string(key.nodes) + "," +
             std::to_string(indices.size()) + "," + std::to_string(passing) + "," +
             std::string(to_string(latest.status)) + "," + format_real(record_runtime(latest)) + "," + median + "\n";
  }
  CommandOutcome outcome;
  const auto file = options.output_dir / "report.csv";
  write_text(file, table);
  outcome.artifacts = {file};
  outcome.summary = history.empty() ? "store is empty\n" : align_table(table);
  return outcome;
}

CommandOutcome cmd_ci_check(const GlobalOptions& options, int window, double threshold) {
  if (window < 1) return usage_error("--window must be >= 1");
  if (!(threshold > 0.0)) return usage_error("--threshold must be positive");
  const auto path = options.store_path();
  std::vector<StoredRecord> history;
  try {
    history = read_store(path);
  } catch (const StoreError& e) {
    return usage_error(e.what());
  }
  if (history.empty()) return {kExitOk, "notice: store is empty, nothing to check\n", {}};

  CommandOutcome outcome;
  std::string table = "benchmark,tags,nodes,run_id,runtime_s,baseline_s,slowdown,severity\n";
  std::string notices;
  bool failed = false;
  for (const auto& [key, indices] : group_records(history)) {
    std::vector<std::size_t> passing;
    for (const auto i : indices) {
      if (history[i].record.status == RunStatus::success) {
        passing.push_back(i);
      } else {
        notices += "notice: " + history[i].run_id + " did not pass (" +
                   std::string(to_string(history[i].record.status)) + ")\n";
      }
    }
    if (passing.size() < 2) {
      notices += "notice: " + key.benchmark + " at " + std::to_string(key.nodes) + " nodes has no baseline yet\n";
      continue;
    }
    const auto& latest = history[passing.back()];
    const std::vector<StoredRecord> earlier(history.begin(), history.begin() + static_cast<std::ptrdiff_t>(passing.back()));
    const auto baseline = compute_baseline(earlier, key.benchmark, key.tags, key.nodes, window);
    const auto finding = detect_regression(latest, baseline, threshold);
    failed = failed || finding.severity == Severity::fail;
    table += key.benchmark + "," + join_tags(key.tags) + "," + std::to_string(key.nodes) + "," + finding.run_id + "," +
             format_real(finding.runtime_seconds) + "," + format_real(baseline.baseline_seconds) + "," +
             format_real(finding.relative_slowdown) + "," + std::string(to_string(finding.severity)) + "\n";
  }
  const auto file = options.output_dir / "ci-check.csv";
  write_text(file, table);
  outcome.artifacts = {file};
  outcome.exit_status = failed ? kExitFailure : kExitOk;
  outcome.summary = align_table(table) + notices + (failed ? "regression detected\n" : "no regression\n");
  return outcome;
}

CommandOutcome cmd_validate(const GlobalOptions& options) {
  try {
    const auto specs = load_definitions(options.definitions);
    return {kExitOk, std::to_string(specs.size()) + " definition(s) valid\n", {}};
  } catch (const SpecError& e) {
    std::string text;
    for (const auto& f : e.findings()) {
      text += "finding: " + (f.benchmark.empty() ? std::string() : f.benchmark + ": ") + f.message + "\n";
    }
    return {kExitUsage, text, {}};
  }
}

namespace {

TagSet parse_tags(const std::string& csv) {
  TagSet tags;
  std::stringstream in(csv);
  std::string tag;
  while (std::getline(in, tag, ',')) {
    const auto b = tag.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    tags.insert(tag.substr(b, tag.find_last_not_of(" \t") - b + 1));
  }
  return tags;
}

std::string executable_dir() {
  std::error_code ec;
  const auto self = fs::read_symlink("/proc/self/exe", ec);
  return ec ? std::string() : self.parent_path().string();
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"benchkit: benchmark campaigns, scaling analysis, procurement evaluation", "benchkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions options;
  std::string definitions = options.definitions.string(), output_dir = options.output_dir.string(), store, tags;
  app.add_option("--definitions", definitions, "Definition file or directory");
  app.add_option("--platform", options.platform, "Platform profile name");
  app.add_option("--tags", tags, "Comma-separated tags");
  app.add_option("--store", store, "Result store file (default <output-dir>/store.ndjson)");
  app.add_option("--output-dir", output_dir, "Directory for all outputs");
  app.add_option("--seed", options.seed, "Seed for the simulated backend");
  app.add_option("--max-parallel", options.max_parallel, "Concurrent workpackages");
  app.set_version_flag("--version", std::string(kVersion));

  auto* run = app.add_subcommand("run", "Execute benchmark definitions and record results");
  std::vector<std::string> run_names;
  run->add_option("benchmarks", run_names, "Benchmark names (default: all definitions)");

  auto* analyze = app.add_subcommand("analyze", "Scaling analysis of stored results");
  AnalyzeOptions analyze_options;
  std::string mode = "strong";
  int reference_nodes = 0;
  analyze->add_option("--benchmark", analyze_options.benchmark, "Benchmark name")->required();
  analyze->add_option("--mode", mode, "strong or weak")->check(CLI::IsMember({"strong", "weak"}));
  analyze->add_option("--reference-nodes", reference_nodes, "Reference node count (default: smallest)");
  analyze->add_option("--window", analyze_options.window, "Runs per node count entering the median");

  auto* evaluate = app.add_subcommand("evaluate", "Value-for-money evaluation of system proposals");
  std::string model_file;
  evaluate->add_option("model", model_file, "Procurement model file")->required();

  auto* report = app.add_subcommand("report", "Summarize the result store");

  auto* ci = app.add_subcommand("ci", "Continuous benchmarking");
  auto* check = ci->add_subcommand("check", "Detect regressions against the stored baseline");
  ci->require_subcommand(1);
  int window = kDefaultWindow;
  double threshold = kDefaultThreshold;
  check->add_option("--window", window, "Passing runs in the baseline median");
  check->add_option("--threshold", threshold, "Relative slowdown that fails the check");

  auto* validate = app.add_subcommand("validate", "Validate benchmark definitions");
  bool print_schema = false;
  validate->add_flag("--print-schema", print_schema, "Print the definition schema reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    app.exit(e, out, err);
    return kExitUsage;
  }

  options.definitions = definitions;
  options.output_dir = output_dir;
  if (!store.empty()) options.store = store;
  options.tags = parse_tags(tags);
  if (const auto dir = executable_dir(); !dir.empty()) options.tool_dirs.push_back(dir);

  CommandOutcome outcome;
  try {
    if (run->parsed()) {
      outcome = cmd_run(options, run_names);
    } else if (analyze->parsed()) {
      analyze_options.mode = mode == "weak" ? ScalingMode::weak : ScalingMode::strong;
      if (reference_nodes > 0) analyze_options.reference_nodes = reference_nodes;
      outcome = cmd_analyze(options, analyze_options);
    } else if (evaluate->parsed()) {
      outcome = cmd_evaluate(options, model_file);
    } else if (report->parsed()) {
      outcome = cmd_report(options);
    } else if (check->parsed()) {
      outcome = cmd_ci_check(options, window, threshold);
    } else if (validate->parsed()) {
      outcome = print_schema ? CommandOutcome{kExitOk, schema_reference(), {}} : cmd_validate(options);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  (outcome.exit_status == kExitUsage ? err : out) << outcome.summary;
  return outcome.exit_status;
}

}  // namespace benchkit
