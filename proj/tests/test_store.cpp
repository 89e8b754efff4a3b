#include <doctest.h>

#include <algorithm>
#include <thread>

#include "benchkit/store.hpp"
#include "support.hpp"

using namespace benchkit;
using testsupport::Rng;
using testsupport::TempDir;

namespace {

StoredRecord make_record(const std::string& id, double seconds, RunStatus status = RunStatus::success, int nodes = 8,
                         const std::string& benchmark = "arbor") {
  StoredRecord s;
  s.run_id = id;
  s.suite_version = "test";
  s.system_fingerprint = "host";
  auto& r = s.record;
  r.workpackage.benchmark = benchmark;
  r.workpackage.nodes = nodes;
  r.workpackage.assignment = {{"nodes", std::to_string(nodes)}};
  r.workpackage.workdir = "runs/" + id;
  r.start_utc = "2025-01-01T00:00:00.000Z";
  r.end_utc = "2025-01-01T00:00:01.000Z";
  r.wall_seconds = seconds;
  r.status = status;
  r.steps.push_back({"execute", "bench \"x\"\n", 0, "FOM: time=" + std::to_string(seconds) + " s\n", "", seconds});
  if (status == RunStatus::success) r.metrics = {{"fom", seconds}, {"time_s", seconds}};
  return s;
}

double median_oracle(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace

TEST_CASE("append and find round trip") {
  TempDir tmp;
  Store store(tmp / "store.ndjson");
  auto rec = make_record("r1", 498.0);
  rec.record.verification.push_back({{VerificationKind::scalar_tolerance, "e", "1.0", 1e-8}, "1.0", true, "ok"});
  rec.record.workpackage.tags = {"quick", "large"};
  CHECK(store.append_record(rec) == "r1");
  CHECK(store.find("r1") == rec);
  CHECK_FALSE(store.find("r2"));
  Store reopened(tmp / "store.ndjson");
  CHECK(reopened.find("r1") == rec);
  CHECK(read_store(tmp / "store.ndjson").size() == 1);
}

TEST_CASE("duplicate run_id is rejected") {
  TempDir tmp;
  Store store(tmp / "s.ndjson");
  store.append_record(make_record("dup", 1));
  CHECK_THROWS_AS(store.append_record(make_record("dup", 2)), StoreError);
  CHECK(store.size() == 1);
  CHECK(testsupport::slurp(tmp / "s.ndjson").find("\"wall_seconds\":2") == std::string::npos);
}

TEST_CASE("many appends, including concurrent ones") {
  TempDir tmp;
  Store store(tmp / "s.ndjson");
  std::vector<std::jthread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 250; ++i) store.append_record(make_record(std::to_string(t) + "-" + std::to_string(i), i + 1));
    });
  }
  threads.clear();
  CHECK(store.size() == 1000);
  CHECK(Store(tmp / "s.ndjson").size() == 1000);
}

TEST_CASE("appending never rewrites earlier bytes") {
  TempDir tmp;
  Store store(tmp / "s.ndjson");
  std::string previous;
  for (int i = 0; i < 20; ++i) {
    store.append_record(make_record("r" + std::to_string(i), i + 1));
    const auto now = testsupport::slurp(tmp / "s.ndjson");
    CHECK(now.compare(0, previous.size(), previous) == 0);
    previous = now;
  }
}

TEST_CASE("torn trailing line is quarantined") {
  TempDir tmp;
  const auto path = tmp / "s.ndjson";
  {
    Store store(path);
    store.append_record(make_record("a", 1));
    store.append_record(make_record("b", 2));
  }
  const auto intact = testsupport::slurp(path);
  testsupport::write_file(path, intact + "{\"run_id\":\"c\",\"suite");
  Store store(path);
  CHECK(store.size() == 2);
  REQUIRE(store.quarantined());
  CHECK(testsupport::slurp(path) == intact);
  CHECK(testsupport::slurp(tmp / "s.ndjson.quarantine") == "{\"run_id\":\"c\",\"suite\n");
  store.append_record(make_record("c", 3));
  CHECK(Store(path).size() == 3);
}

TEST_CASE("corruption in the middle is an error") {
  TempDir tmp;
  const auto path = tmp / "s.ndjson";
  testsupport::write_file(path, "not json\n" + encode_record(make_record("a", 1)) + "\n");
  CHECK_THROWS_AS(Store{path}, StoreError);
}

TEST_CASE("median baseline") {
  const std::vector<StoredRecord> h = {make_record("1", 100), make_record("2", 102), make_record("3", 98)};
  CHECK(compute_baseline(h, "arbor", {}, 8, 3).baseline_seconds == 100.0);
  CHECK(compute_baseline(h, "arbor", {}, 8, 1).baseline_seconds == 98.0);
  CHECK(compute_baseline(h, "arbor", {}, 8, 2).baseline_seconds == 100.0);
  CHECK(compute_baseline(h, "arbor", {}, 8).samples == 3);
  CHECK_THROWS_AS(compute_baseline(h, "arbor", {}, 16), StoreError);
  CHECK_THROWS_AS(compute_baseline(h, "other", {}, 8), StoreError);
  CHECK_THROWS_AS(compute_baseline(h, "arbor", {"quick"}, 8), StoreError);
  CHECK_THROWS_AS(compute_baseline(h, "arbor", {}, 8, 0), StoreError);
}

TEST_CASE("baseline matches a brute-force median") {
  Rng rng(73);
  for (int i = 0; i < 300; ++i) {
    std::vector<StoredRecord> h;
    std::vector<double> passing;
    const int n = testsupport::uniform_int(rng, 1, 30);
    for (int k = 0; k < n; ++k) {
      const double t = testsupport::uniform_real(rng, 50, 150);
      const int nodes = testsupport::uniform_int(rng, 0, 3) ? 8 : 16;
      const auto status = testsupport::uniform_int(rng, 0, 4) ? RunStatus::success : RunStatus::step_failure;
      h.push_back(make_record(std::to_string(k), t, status, nodes));
      if (status == RunStatus::success && nodes == 8) passing.push_back(t);
    }
    const int window = testsupport::uniform_int(rng, 1, 10);
    if (passing.empty()) {
      CHECK_THROWS_AS(compute_baseline(h, "arbor", {}, 8, window), StoreError);
      continue;
    }
    const std::vector<double> recent(passing.end() - std::min<std::ptrdiff_t>(window, passing.size()), passing.end());
    CHECK(compute_baseline(h, "arbor", {}, 8, window).baseline_seconds == median_oracle(recent));
  }
}

TEST_CASE("failed runs never change a baseline") {
  Rng rng(79);
  for (int i = 0; i < 300; ++i) {
    std::vector<StoredRecord> h;
    for (int k = testsupport::uniform_int(rng, 1, 12); k > 0; --k) {
      h.push_back(make_record("p" + std::to_string(k), testsupport::uniform_real(rng, 50, 150)));
    }
    const auto before = compute_baseline(h, "arbor", {}, 8, 5).baseline_seconds;
    for (int k = testsupport::uniform_int(rng, 1, 10); k > 0; --k) {
      const auto pos = static_cast<std::ptrdiff_t>(testsupport::uniform_int(rng, 0, static_cast<int>(h.size())));
      const auto status = testsupport::uniform_int(rng, 0, 1) ? RunStatus::step_failure : RunStatus::verification_failure;
      h.insert(h.begin() + pos, make_record("f" + std::to_string(k), testsupport::uniform_real(rng, 1, 1000), status));
    }
    CHECK(compute_baseline(h, "arbor", {}, 8, 5).baseline_seconds == before);
  }
}

TEST_CASE("regression detection") {
  const std::vector<StoredRecord> h = {make_record("1", 100), make_record("2", 102), make_record("3", 98)};
  const auto base = compute_baseline(h, "arbor", {}, 8);
  const auto slow = detect_regression(make_record("4", 106), base, 0.05);
  CHECK(slow.severity == Severity::fail);
  CHECK(slow.relative_slowdown == doctest::Approx(0.06));
  CHECK(detect_regression(make_record("5", 104), base, 0.05).severity == Severity::info);
  const auto fast = detect_regression(make_record("6", 95), base, 0.05);
  CHECK(fast.severity == Severity::info);
  CHECK(fast.relative_slowdown == doctest::Approx(-0.05));
  CHECK(detect_regression(make_record("7", 104.6), base, 0.05).severity == Severity::warn);
  CHECK(detect_regression(make_record("8", 105), base, 0.05).severity == Severity::warn);
  CHECK_THROWS_AS(detect_regression(make_record("9", 1), base, 0.0), StoreError);
}

TEST_CASE("severity is monotone in runtime") {
  Rng rng(83);
  Baseline b;
  b.baseline_seconds = 100;
  for (int i = 0; i < 2000; ++i) {
    const double threshold = testsupport::log_uniform(rng, 1e-3, 1.0);
    const double t1 = testsupport::uniform_real(rng, 50, 200);
    const double t2 = t1 + testsupport::uniform_real(rng, 0, 50);
    const auto s1 = detect_regression(make_record("a", t1), b, threshold).severity;
    const auto s2 = detect_regression(make_record("b", t2), b, threshold).severity;
    CHECK(static_cast<int>(s2) >= static_cast<int>(s1));
  }
}

TEST_CASE("runtime prefers the normalized metric") {
  auto r = make_record("x", 10);
  r.record.metrics["time_s"] = 3.5;
  CHECK(record_runtime(r.record) == 3.5);
  r.record.metrics.clear();
  CHECK(record_runtime(r.record) == 10.0);
}
