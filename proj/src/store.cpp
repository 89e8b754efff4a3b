#include "benchkit/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace benchkit {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::info: return "info";
    case Severity::warn: return "warn";
    case Severity::fail: return "fail";
  }
  return "info";
}

double record_runtime(const RunRecord& record) {
  if (const auto it = record.metrics.find("time_s"); it != record.metrics.end()) return it->second;
  return record.wall_seconds;
}

namespace {

ojson rule_json(const VerificationRule& r) {
  ojson j;
  j["kind"] = std::string(to_string(r.kind));
  j["target"] = r.target;
  j["reference"] = r.reference ? ojson(*r.reference) : ojson(nullptr);
  j["rel_tolerance"] = r.rel_tolerance;
  return j;
}

VerificationRule rule_from(const ojson& j) {
  VerificationRule r;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "scalar_tolerance") {
    r.kind = VerificationKind::scalar_tolerance;
  } else if (kind == "exact_match") {
    r.kind = VerificationKind::exact_match;
  } else if (kind == "key_presence") {
    r.kind = VerificationKind::key_presence;
  } else {
    throw StoreError("unknown verification kind '" + kind + "'");
  }
  r.target = j.at("target").get<std::string>();
  if (!j.at("reference").is_null()) r.reference = j.at("reference").get<std::string>();
  r.rel_tolerance = j.at("rel_tolerance").get<double>();
  return r;
}

}  // namespace

std::string encode_record(const StoredRecord& s) {
  const auto& r = s.record;
  const auto& wp = r.workpackage;
  ojson j;
  j["run_id"] = s.run_id;
  j["suite_version"] = s.suite_version;
  j["system_fingerprint"] = s.system_fingerprint;
  j["benchmark"] = wp.benchmark;
  j["workpackage_index"] = wp.index;
  j["tags"] = ojson(std::vector<std::string>(wp.tags.begin(), wp.tags.end()));
  j["nodes"] = wp.nodes;
  j["assignment"] = ojson::object();
  for (const auto& [k, v] : wp.assignment) j["assignment"][k] = v;
  j["workdir"] = wp.workdir.generic_string();
  j["start"] = r.start_utc;
  j["end"] = r.end_utc;
  j["wall_seconds"] = r.wall_seconds;
  j["status"] = std::string(to_string(r.status));
  j["steps"] = ojson::array();
  for (const auto& st : r.steps) {
    j["steps"].push_back({{"step", st.step},
                          {"command", st.command},
                          {"exit_status", st.exit_status},
                          {"stdout", st.stdout_text},
                          {"stderr", st.stderr_text},
                          {"wall_seconds", st.wall_seconds}});
  }
  j["metrics"] = ojson::object();
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = v;
  j["verification"] = ojson::array();
  for (const auto& v : r.verification) {
    j["verification"].push_back(
        {{"rule", rule_json(v.rule)}, {"observed", v.observed}, {"passed", v.passed}, {"detail", v.detail}});
  }
  return j.dump();
}

StoredRecord decode_record(std::string_view line) {
  try {
    const auto j = ojson::parse(line.begin(), line.end());
    StoredRecord s;
    s.run_id = j.at("run_id").get<std::string>();
    s.suite_version = j.at("suite_version").get<std::string>();
    s.system_fingerprint = j.at("system_fingerprint").get<std::string>();
    auto& r = s.record;
    auto& wp = r.workpackage;
    wp.benchmark = j.at("benchmark").get<std::string>();
    wp.index = j.at("workpackage_index").get<std::size_t>();
    for (const auto& t : j.at("tags")) wp.tags.insert(t.get<std::string>());
    wp.nodes = j.at("nodes").get<int>();
    for (const auto& [k, v] : j.at("assignment").items()) wp.assignment[k] = v.get<std::string>();
    wp.workdir = j.at("workdir").get<std::string>();
    r.start_utc = j.at("start").get<std::string>();
    r.end_utc = j.at("end").get<std::string>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    const auto status = run_status_from(j.at("status").get<std::string>());
    if (!status) throw StoreError("unknown status");
    r.status = *status;
    for (const auto& st : j.at("steps")) {
      r.steps.push_back({st.at("step").get<std::string>(), st.at("command").get<std::string>(),
                         st.at("exit_status").get<int>(), st.at("stdout").get<std::string>(),
                         st.at("stderr").get<std::string>(), st.at("wall_seconds").get<double>()});
    }
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.get<double>();
    for (const auto& v : j.at("verification")) {
      r.verification.push_back({rule_from(v.at("rule")), v.at("observed").get<std::string>(),
                                v.at("passed").get<bool>(), v.at("detail").get<std::string>()});
    }
    if (s.run_id.empty()) throw StoreError("empty run_id");
    if (wp.nodes < 1 || !(r.wall_seconds >= 0.0)) throw StoreError("invalid nodes or wall_seconds");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw StoreError(std::string("malformed record: ") + e.what());
  }
}

namespace {

struct Loaded {
  std::vector<StoredRecord> records;
  std::optional<std::string> torn;  // trailing text that is not a complete record
  std::size_t good_bytes = 0;       // length of the intact prefix
};

Loaded load(const std::filesystem::path& path) {
  Loaded out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto text = buf.str();

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const auto line = std::string_view(text).substr(pos, terminated ? nl - pos : std::string::npos);
    const auto next = terminated ? nl + 1 : text.size();
    if (line.empty()) {
      pos = next;
      out.good_bytes = pos;
      continue;
    }
    try {
      if (!terminated) throw StoreError("unterminated line");
      out.records.push_back(decode_record(line));
    } catch (const StoreError& e) {
      if (next == text.size()) {
        out.torn = std::string(line);
        return out;
      }
      throw StoreError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    pos = next;
    out.good_bytes = pos;
  }
  return out;
}

}  // namespace

std::vector<StoredRecord> read_store(const std::filesystem::path& path) { return load(path).records; }

Store::Store(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  auto loaded = load(path_);
  std::set<std::string> ids;
  for (const auto& r : loaded.records) {
    if (!ids.insert(r.run_id).second) throw StoreError("store holds duplicate run_id '" + r.run_id + "'");
  }
  records_ = std::move(loaded.records);
  if (loaded.torn) {
    std::ofstream q(path_.string() + ".quarantine", std::ios::binary | std::ios::app);
    q << *loaded.torn << '\n';
    if (!q) throw StoreError("cannot write quarantine file for '" + path_.string() + "'");
    std::filesystem::resize_file(path_, loaded.good_bytes);
    quarantined_ = std::move(loaded.torn);
  }
  if (!std::filesystem::exists(path_)) std::ofstream(path_, std::ios::binary);
}

std::string Store::append_record(const StoredRecord& record) {
  if (record.run_id.empty()) throw StoreError("record has no run_id");
  const auto line = encode_record(record) + "\n";
  std::lock_guard lock(mutex_);
  if (std::any_of(records_.begin(), records_.end(), [&](const auto& r) { return r.run_id == record.run_id; })) {
    throw StoreError("duplicate run_id '" + record.run_id + "'");
  }
  const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw StoreError("cannot open store '" + path_.string() + "': " + std::strerror(errno));
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw StoreError("store write failed: " + std::string(std::strerror(err)));
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw StoreError("store fsync failed");
  records_.push_back(record);
  return record.run_id;
}

std::optional<StoredRecord> Store::find(std::string_view run_id) const {
  std::lock_guard lock(mutex_);
  for (const auto& r : records_) {
    if (r.run_id == run_id) return r;
  }
  return std::nullopt;
}

std::vector<StoredRecord> Store::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t Store::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

bool matches_group(const StoredRecord& r, std::string_view benchmark, const TagSet& tags, int nodes) {
  const auto& wp = r.record.workpackage;
  return wp.benchmark == benchmark && wp.tags == tags && wp.nodes == nodes;
}

Baseline compute_baseline(const std::vector<StoredRecord>& history, std::string_view benchmark, const TagSet& tags,
                          int nodes, int window) {
  if (window < 1) throw StoreError("baseline window must be positive");
  std::vector<double> recent;
  for (auto it = history.rbegin(); it != history.rend() && recent.size() < static_cast<std::size_t>(window); ++it) {
    if (it->record.status == RunStatus::success && matches_group(*it, benchmark, tags, nodes)) {
      recent.push_back(record_runtime(it->record));
    }
  }
  if (recent.empty()) {
    throw StoreError("no passing records for '" + std::string(benchmark) + "' at " + std::to_string(nodes) +
                     " nodes");
  }
  std::sort(recent.begin(), recent.end());
  const auto n = recent.size();
  Baseline b;
  b.benchmark = std::string(benchmark);
  b.tags = tags;
  b.nodes = nodes;
  b.window = window;
  b.samples = n;
  b.baseline_seconds = n % 2 == 1 ? recent[n / 2] : (recent[n / 2 - 1] + recent[n / 2]) / 2.0;
  return b;
}

Baseline compute_baseline(const Store& store, std::string_view benchmark, const TagSet& tags, int nodes,
                          int window) {
  return compute_baseline(store.records(), benchmark, tags, nodes, window);
}

Severity classify_slowdown(double slowdown, double threshold) {
  if (slowdown > threshold) return Severity::fail;
  if (slowdown > 0.9 * threshold) return Severity::warn;
  return Severity::info;
}

RegressionFinding detect_regression(const StoredRecord& record, const Baseline& baseline, double threshold) {
  if (!(threshold > 0.0)) throw StoreError("regression threshold must be positive");
  if (!(baseline.baseline_seconds > 0.0)) throw StoreError("baseline must be positive");
  RegressionFinding f;
  f.run_id = record.run_id;
  f.baseline = baseline;
  f.runtime_seconds = record_runtime(record.record);
  f.relative_slowdown = (f.runtime_seconds - baseline.baseline_seconds) / baseline.baseline_seconds;
  f.severity = classify_slowdown(f.relative_slowdown, threshold);
  return f;
}

}  // namespace benchkit
