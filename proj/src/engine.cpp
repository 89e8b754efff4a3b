#include "benchkit/engine.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "benchkit/numbers.hpp"
#include "benchkit/workloads.hpp"
#include "template_text.hpp"

extern char** environ;

namespace benchkit {

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::success: return "success";
    case RunStatus::step_failure: return "step-failure";
    case RunStatus::verification_failure: return "verification-failure";
  }
  return "step-failure";
}

std::optional<RunStatus> run_status_from(std::string_view text) {
  if (text == "success") return RunStatus::success;
  if (text == "step-failure") return RunStatus::step_failure;
  if (text == "verification-failure") return RunStatus::verification_failure;
  return std::nullopt;
}

std::string utc_now_rfc3339() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string render_template(std::string_view text, const Assignment& assignment) {
  std::vector<detail::TemplatePiece> pieces;
  try {
    pieces = detail::tokenize_template(text);
  } catch (const detail::TemplateSyntaxError& e) {
    throw TemplateError(e.what());
  }
  std::string out;
  out.reserve(text.size());
  for (const auto& piece : pieces) {
    if (!piece.placeholder) {
      out += piece.text;
      continue;
    }
    const auto it = assignment.find(piece.text);
    if (it == assignment.end()) throw TemplateError("unknown placeholder '${" + piece.text + "}'");
    out += it->second;
  }
  return out;
}

TagSet effective_tags(const BenchmarkSpec& spec, const TagSet& tags) {
  TagSet out = tags;
  for (const auto& v : spec.variants) {
    if (tags.count(v.name)) out.insert(v.tag_overrides.begin(), v.tag_overrides.end());
  }
  return out;
}

namespace {

// Active parameters after tag selection; a later set replaces an earlier
// definition of the same name in place.
std::vector<ParameterDef> active_parameters(const BenchmarkSpec& spec, const TagSet& tags) {
  std::vector<ParameterDef> merged;
  for (const auto& set : spec.parameter_sets) {
    if (!set.active_for(tags)) continue;
    for (const auto& p : set.parameters) {
      const auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& m) { return m.name == p.name; });
      if (it == merged.end()) {
        merged.push_back(p);
      } else {
        *it = p;
      }
    }
  }
  return merged;
}

// Template parameters ordered so that each comes after the templates it references.
std::vector<const ParameterDef*> template_order(const std::vector<ParameterDef>& params) {
  std::map<std::string, const ParameterDef*> templates;
  std::set<std::string> literals;
  for (const auto& p : params) {
    if (p.is_template()) {
      templates[p.name] = &p;
    } else {
      literals.insert(p.name);
    }
  }
  std::vector<const ParameterDef*> order;
  std::map<std::string, int> state;  // 1 visiting, 2 done
  std::function<void(const ParameterDef&)> visit = [&](const ParameterDef& p) {
    auto& s = state[p.name];
    if (s == 2) return;
    if (s == 1) throw EngineError("parameter-reference cycle through '" + p.name + "'");
    s = 1;
    std::vector<std::string> refs;
    try {
      refs = template_references(*p.template_text);
    } catch (const detail::TemplateSyntaxError& e) {
      throw TemplateError("parameter '" + p.name + "': " + e.what());
    }
    for (const auto& ref : refs) {
      if (const auto t = templates.find(ref); t != templates.end()) {
        visit(*t->second);
      } else if (!literals.count(ref)) {
        throw EngineError("parameter '" + p.name + "' references unresolvable parameter '" + ref + "'");
      }
    }
    state[p.name] = 2;
    order.push_back(&p);
  };
  for (const auto& p : params) {
    if (p.is_template()) visit(p);
  }
  return order;
}

int nodes_of(const Assignment& assignment, int fallback) {
  const auto it = assignment.find("nodes");
  if (it == assignment.end()) return fallback;
  const auto v = parse_real(it->second);
  if (!v || *v != std::floor(*v) || *v < 1 || *v > 1e9) {
    throw EngineError("parameter 'nodes' must be a positive integer, got '" + it->second + "'");
  }
  return static_cast<int>(*v);
}

}  // namespace

std::vector<Workpackage> expand_parameters(const BenchmarkSpec& spec, const TagSet& tags) {
  const auto selected = effective_tags(spec, tags);
  const auto params = active_parameters(spec, selected);
  const auto templates = template_order(params);

  std::vector<const ParameterDef*> literals;
  for (const auto& p : params) {
    if (!p.is_template()) {
      if (p.values.empty()) throw EngineError("parameter '" + p.name + "' has no values");
      literals.push_back(&p);
    }
  }

  std::set<std::string> step_refs;
  for (const auto& s : spec.steps) {
    try {
      for (auto& r : template_references(s.command)) step_refs.insert(std::move(r));
    } catch (const detail::TemplateSyntaxError& e) {
      throw TemplateError("step '" + s.name + "': " + e.what());
    }
  }
  for (const auto& ref : step_refs) {
    if (std::none_of(params.begin(), params.end(), [&](const auto& p) { return p.name == ref; })) {
      throw EngineError("step template references unresolvable parameter '" + ref + "'");
    }
  }

  std::vector<Workpackage> out;
  std::vector<std::size_t> odometer(literals.size(), 0);
  while (true) {
    Workpackage wp;
    wp.benchmark = spec.name;
    wp.index = out.size();
    wp.tags = selected;
    for (std::size_t i = 0; i < literals.size(); ++i) {
      wp.assignment[literals[i]->name] = literals[i]->values[odometer[i]];
    }
    for (const auto* t : templates) wp.assignment[t->name] = render_template(*t->template_text, wp.assignment);
    wp.nodes = nodes_of(wp.assignment, spec.reference_nodes);
    out.push_back(std::move(wp));

    // Last parameter varies fastest.
    std::size_t k = literals.size();
    while (k > 0) {
      --k;
      if (++odometer[k] < literals[k]->values.size()) break;
      odometer[k] = 0;
      if (k == 0) return out;
    }
    if (literals.empty()) return out;
  }
}

ExecutionPlan plan(const BenchmarkSpec& spec) {
  ExecutionPlan p;
  p.benchmark = spec.name;
  p.fom = spec.fom;
  p.verification = spec.verification;

  // Kahn's algorithm, always taking the earliest-declared ready step.
  const auto n = spec.steps.size();
  std::vector<bool> placed(n, false);
  while (p.steps.size() < n) {
    bool progressed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (placed[i]) continue;
      const auto& step = spec.steps[i];
      const bool ready = std::all_of(step.depends_on.begin(), step.depends_on.end(), [&](const std::string& dep) {
        return std::any_of(p.steps.begin(), p.steps.end(), [&](const Step& s) { return s.name == dep; });
      });
      if (ready) {
        placed[i] = true;
        p.steps.push_back(step);
        progressed = true;
        break;
      }
    }
    if (!progressed) throw EngineError("step dependencies of '" + spec.name + "' are cyclic or dangling");
  }
  return p;
}

std::vector<std::string> render_plan(const ExecutionPlan& plan, const Workpackage& workpackage) {
  std::vector<std::string> commands;
  commands.reserve(plan.steps.size());
  for (const auto& s : plan.steps) commands.push_back(render_template(s.command, workpackage.assignment));
  return commands;
}

void assign_workdirs(std::vector<Workpackage>& workpackages, const std::filesystem::path& run_root) {
  for (auto& wp : workpackages) wp.workdir = run_root / wp.benchmark / std::to_string(wp.index);
}

namespace {

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EngineError("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// Output the figure of merit is read from: execute and postprocess steps, or
// every step if the plan has neither.
std::string fom_source(const std::vector<StepOutput>& outputs, const ExecutionPlan& plan) {
  std::string text;
  bool any = false;
  for (const auto& out : outputs) {
    const auto* step = &*std::find_if(plan.steps.begin(), plan.steps.end(),
                                      [&](const Step& s) { return s.name == out.step; });
    if (step->kind == StepKind::execute || step->kind == StepKind::postprocess) {
      text += out.stdout_text;
      any = true;
    }
  }
  if (any) return text;
  for (const auto& out : outputs) text += out.stdout_text;
  return text;
}

RunRecord run_workpackage(const ExecutionPlan& plan, const Workpackage& wp, Backend& backend,
                          const ExecuteOptions& options) {
  RunRecord record;
  record.workpackage = wp;
  record.start_utc = utc_now_rfc3339();
  record.status = RunStatus::success;

  std::vector<std::string> commands;
  std::string render_error;
  try {
    commands = render_plan(plan, wp);
  } catch (const EngineError& e) {
    render_error = e.what();
  }

  auto environment = options.platform.environment;
  environment.emplace_back("BENCH_NODES", std::to_string(wp.nodes));

  const auto caps = backend.capabilities();
  for (std::size_t i = 0; i < plan.steps.size() && render_error.empty(); ++i) {
    const auto& step = plan.steps[i];
    const auto step_dir = wp.workdir / step.name;
    std::filesystem::create_directories(step_dir);

    StepOutput out;
    out.step = step.name;
    try {
      auto with_command = wp.assignment;
      with_command["command"] = commands[i];
      out.command = render_template(options.platform.submission_template, with_command);
      if (caps.max_nodes > 0 && wp.nodes > caps.max_nodes) {
        throw BackendError("workpackage needs " + std::to_string(wp.nodes) + " nodes, backend offers " +
                           std::to_string(caps.max_nodes));
      }
      for (int it = 0; it < step.iterations; ++it) {
        const auto result = backend.submit({out.command, wp.nodes, environment, step_dir});
        out.stdout_text += result.stdout_text;
        out.stderr_text += result.stderr_text;
        out.wall_seconds += result.wall_seconds;
        out.exit_status = result.exit_status;
        if (result.exit_status != 0) break;
      }
    } catch (const EngineError& e) {
      out.exit_status = 127;
      out.stderr_text += std::string("submission failed: ") + e.what() + "\n";
    }

    write_file(step_dir / "stdout.txt", out.stdout_text);
    write_file(step_dir / "stderr.txt", out.stderr_text);
    write_file(step_dir / "rc.txt", std::to_string(out.exit_status) + "\n");
    record.wall_seconds += out.wall_seconds;
    const bool failed = out.exit_status != 0;
    record.steps.push_back(std::move(out));
    if (failed) {
      record.status = RunStatus::step_failure;
      break;
    }
  }
  if (!render_error.empty()) {
    record.status = RunStatus::step_failure;
    record.steps.push_back({plan.steps.empty() ? "" : plan.steps.front().name, "", 127, "", render_error + "\n", 0.0});
  }

  if (record.status == RunStatus::success) {
    const auto source = fom_source(record.steps, plan);
    try {
      const auto metric = extract_metrics(source, plan.fom);
      record.metrics["fom"] = metric.value;
      record.metrics["time_s"] = normalize_fom(metric, plan.fom);
    } catch (const MetricError& e) {
      VerificationOutcome missing;
      missing.rule.kind = VerificationKind::key_presence;
      missing.rule.target = "fom";
      missing.passed = false;
      missing.detail = e.what();
      record.verification.push_back(std::move(missing));
    }
    std::string all_output;
    for (const auto& s : record.steps) all_output += s.stdout_text;
    for (const auto& rule : plan.verification) {
      record.verification.push_back(apply_rule(rule, all_output, record.metrics, options.reference_dir));
    }
    if (std::any_of(record.verification.begin(), record.verification.end(), [](const auto& v) { return !v.passed; })) {
      record.status = RunStatus::verification_failure;
    }
  }
  record.end_utc = utc_now_rfc3339();
  return record;
}

}  // namespace

std::vector<RunRecord> execute(const ExecutionPlan& plan, const std::vector<Workpackage>& workpackages,
                               Backend& backend, const ExecuteOptions& options) {
  if (options.max_parallel < 1) throw EngineError("max_parallel must be >= 1");

  std::set<std::filesystem::path> dirs;
  for (const auto& wp : workpackages) {
    if (wp.workdir.empty()) throw EngineError("workpackage " + std::to_string(wp.index) + " has no working directory");
    const auto dir = std::filesystem::absolute(wp.workdir).lexically_normal();
    if (!dirs.insert(dir).second || std::filesystem::exists(dir)) {
      throw EngineError("working directory collision at '" + wp.workdir.string() + "'");
    }
  }
  for (const auto& wp : workpackages) std::filesystem::create_directories(wp.workdir);

  auto parallel = std::min<std::size_t>(static_cast<std::size_t>(options.max_parallel), workpackages.size());
  if (const auto cap = backend.capabilities().max_parallel; cap > 0) {
    parallel = std::min<std::size_t>(parallel, static_cast<std::size_t>(cap));
  }

  std::vector<RunRecord> records(workpackages.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (auto i = next.fetch_add(1); i < workpackages.size(); i = next.fetch_add(1)) {
      records[i] = run_workpackage(plan, workpackages[i], backend, options);
    }
  };
  if (parallel <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < parallel; ++t) pool.emplace_back(worker);
  }
  return records;
}

// ---------------------------------------------------------------------------
// Local backend

LocalBackend::LocalBackend(std::vector<std::string> extra_path) : extra_path_(std::move(extra_path)) {}

BackendCapabilities LocalBackend::capabilities() const { return {0, false, 0}; }

namespace {

struct Pipe {
  int fds[2] = {-1, -1};
  ~Pipe() {
    for (int fd : fds) {
      if (fd >= 0) ::close(fd);
    }
  }
  void close_end(int i) {
    if (fds[i] >= 0) ::close(fds[i]);
    fds[i] = -1;
  }
};

}  // namespace

SubmitResult LocalBackend::submit(const SubmitRequest& request) {
  // Everything the child needs is prepared before fork().
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    const std::string_view kv(*e);
    const auto eq = kv.find('=');
    if (eq != std::string_view::npos) env[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
  }
  for (const auto& [k, v] : request.environment) env[k] = v;
  if (!extra_path_.empty()) {
    std::string path;
    for (const auto& p : extra_path_) path += p + ":";
    env["PATH"] = path + env["PATH"];
  }
  std::vector<std::string> env_strings;
  for (const auto& [k, v] : env) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);

  std::string shell = "/bin/sh", flag = "-c", command = request.command;
  std::array<char*, 4> argv{shell.data(), flag.data(), command.data(), nullptr};
  const auto workdir = request.workdir.string();

  Pipe out, err;
  if (::pipe2(out.fds, O_CLOEXEC) != 0 || ::pipe2(err.fds, O_CLOEXEC) != 0) {
    throw BackendError(std::string("pipe: ") + std::strerror(errno));
  }
  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(out.fds[1], STDOUT_FILENO);
    ::dup2(err.fds[1], STDERR_FILENO);
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    if (!workdir.empty() && ::chdir(workdir.c_str()) != 0) _exit(126);
    ::execve(argv[0], argv.data(), envp.data());
    _exit(127);
  }
  out.close_end(1);
  err.close_end(1);

  SubmitResult result;
  std::array<pollfd, 2> fds{pollfd{out.fds[0], POLLIN, 0}, pollfd{err.fds[0], POLLIN, 0}};
  std::array<std::string*, 2> sinks{&result.stdout_text, &result.stderr_text};
  char buf[65536];
  int open_fds = 2;
  while (open_fds > 0) {
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const auto n = ::read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        sinks[i]->append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw BackendError(std::string("waitpid: ") + std::strerror(errno));
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (WIFEXITED(status)) {
    result.exit_status = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_status = 128 + WTERMSIG(status);
  } else {
    result.exit_status = 1;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Simulated backend

SimulatedBackend::SimulatedBackend(std::uint64_t seed, int max_nodes) : seed_(seed), max_nodes_(max_nodes) {}

BackendCapabilities SimulatedBackend::capabilities() const { return {max_nodes_, true, 0}; }

SubmitResult SimulatedBackend::submit(const SubmitRequest& request) {
  SubmitResult result;
  std::vector<std::string> argv;
  try {
    argv = split_command(request.command);
  } catch (const WorkloadError& e) {
    result.exit_status = 2;
    result.stderr_text = std::string(e.what()) + "\n";
    return result;
  }
  if (argv.empty() || argv[0] == "true" || argv[0] == ":") return result;
  if (argv[0] == "false") {
    result.exit_status = 1;
    return result;
  }
  if (argv[0] == "exit") {
    const auto code = argv.size() > 1 ? parse_real(argv[1]) : std::optional<double>(0.0);
    result.exit_status = code ? static_cast<int>(*code) & 0xff : 2;
    return result;
  }
  if (argv[0] == "echo") {
    for (std::size_t i = 1; i < argv.size(); ++i) {
      if (i > 1) result.stdout_text += ' ';
      result.stdout_text += argv[i];
    }
    result.stdout_text += '\n';
    return result;
  }
  if (auto sim = simulate_workload(argv, request.nodes, seed_)) {
    result.exit_status = sim->exit_status;
    result.stdout_text = std::move(sim->stdout_text);
    result.stderr_text = std::move(sim->stderr_text);
    result.wall_seconds = sim->seconds;
    return result;
  }
  result.exit_status = 127;
  result.stderr_text = "simulated backend: command '" + argv[0] + "' is not simulatable\n";
  return result;
}

}  // namespace benchkit
