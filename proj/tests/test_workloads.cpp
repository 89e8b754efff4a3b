#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "benchkit/scaling.hpp"
#include "benchkit/workloads.hpp"
#include "support.hpp"

using namespace benchkit;
using testsupport::Rng;

namespace {

double median_pair_bandwidth(const BisectionConfig& cfg) {
  std::vector<double> samples;
  for (int i = 0; i < 3; ++i) {
    const auto r = run_bisection(cfg);
    for (const auto& p : r.pairs) samples.push_back(p.bytes_per_second);
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

TEST_CASE("Amdahl model") {
  const AmdahlConfig cfg{1.0, 8.0, 0.0, 0};
  CHECK(amdahl_time(cfg, 4) == 3.0);
  CHECK(run_amdahl(cfg, 4, AmdahlMode::compute) == "FOM: time=3.0 s");
  CHECK(amdahl_time(cfg, 1) == 9.0);
  CHECK_THROWS_AS(amdahl_time(cfg, 0), WorkloadError);
  CHECK_THROWS_AS(amdahl_time({1, 1, 1.0, 0}, 1), WorkloadError);
}

TEST_CASE("Amdahl noise is bounded, seeded and reproducible") {
  Rng rng(89);
  for (int i = 0; i < 500; ++i) {
    AmdahlConfig cfg{testsupport::uniform_real(rng, 0, 10), testsupport::uniform_real(rng, 0, 100),
                     testsupport::uniform_real(rng, 0, 0.5), rng()};
    const int n = testsupport::uniform_int(rng, 1, 1024);
    const double t = amdahl_time(cfg, n);
    const double ideal_parallel = cfg.parallel_seconds / n;
    CHECK(t >= cfg.serial_seconds + ideal_parallel * (1 - cfg.noise_fraction) - 1e-12);
    CHECK(t <= cfg.serial_seconds + ideal_parallel * (1 + cfg.noise_fraction) + 1e-12);
    CHECK(amdahl_time(cfg, n) == t);
  }
}

TEST_CASE("Amdahl runs fitted across node counts recover the model") {
  std::vector<ScalingPoint> pts;
  const AmdahlConfig cfg{10.0, 80.0, 0.0, 0};
  for (int n : {1, 2, 4, 8}) {
    const auto argv = split_command("bench-amdahl --serial 10 --parallel 80");
    const auto sim = simulate_workload(argv, n, 7);
    REQUIRE(sim);
    CHECK(sim->exit_status == 0);
    CHECK(sim->seconds == amdahl_time(cfg, n));
    pts.push_back({n, sim->seconds});
  }
  const auto fit = fit_amdahl(make_series("amdahl", ScalingMode::strong, pts, 1));
  CHECK(fit.serial_seconds == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(fit.parallel_seconds == doctest::Approx(80.0).epsilon(1e-12));
  CHECK(fit.residual < 1e-9);
}

TEST_CASE("Amdahl sleep mode waits for the modeled time") {
  const auto start = std::chrono::steady_clock::now();
  run_amdahl({0.2, 0.4, 0.0, 0}, 2, AmdahlMode::sleep);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(elapsed >= 0.4);
  CHECK(elapsed < 0.4 * 1.2 + 0.05);
}

TEST_CASE("bisection pairing") {
  CHECK(pair_bisection(4) == std::vector<std::pair<int, int>>{{0, 2}, {1, 3}});
  CHECK(pair_bisection(2) == std::vector<std::pair<int, int>>{{0, 1}});
  CHECK_THROWS_AS(pair_bisection(3), WorkloadError);
  CHECK_THROWS_AS(pair_bisection(0), WorkloadError);
  CHECK_THROWS_AS(pair_bisection(-2), WorkloadError);
}

TEST_CASE("bisection pairing is a perfect matching across halves") {
  for (int p = 2; p <= 512; p += 2) {
    const auto pairs = pair_bisection(p);
    CHECK(pairs.size() == static_cast<std::size_t>(p / 2));
    std::set<int> seen;
    for (const auto& [a, b] : pairs) {
      CHECK(a < p / 2);
      CHECK(b >= p / 2);
      CHECK(b < p);
      CHECK(seen.insert(a).second);
      CHECK(seen.insert(b).second);
    }
    CHECK(static_cast<int>(seen.size()) == p);
  }
}

TEST_CASE("bisection minimum") {
  std::vector<PairBandwidth> pairs = {{0, 2, 1, 1, 5.0}, {1, 3, 1, 1, 2.0}};
  CHECK(bisection_minimum(pairs) == 2.0);
  CHECK_THROWS_AS(bisection_minimum({}), WorkloadError);
}

TEST_CASE("loopback bisection with one pair") {
  BisectionConfig cfg;
  cfg.process_count = 2;
  cfg.message_bytes = 64;
  cfg.repetitions = 2;
  const auto r = run_bisection(cfg);
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.min_bytes_per_second == r.pairs[0].bytes_per_second);
  CHECK(r.pairs[0].bytes == 64.0 * 2 * 2);
}

TEST_CASE("loopback bisection reports the true minimum") {
  BisectionConfig cfg;
  cfg.process_count = 8;
  cfg.message_bytes = 256 << 10;
  cfg.repetitions = 2;
  const auto r = run_bisection(cfg);
  REQUIRE(r.pairs.size() == 4);
  double oracle = INFINITY;
  for (const auto& p : r.pairs) {
    CHECK(p.bytes == static_cast<double>(cfg.message_bytes) * cfg.repetitions * 2);
    CHECK(p.bytes_per_second == doctest::Approx(p.bytes / p.seconds).epsilon(1e-15));
    CHECK(r.min_bytes_per_second <= p.bytes_per_second);
    oracle = std::min(oracle, p.bytes / p.seconds);
  }
  CHECK(r.min_bytes_per_second == doctest::Approx(oracle).epsilon(1e-15));
  const auto text = format_bisection(r);
  CHECK(text.find("pair 0 4:") != std::string::npos);
  CHECK(text.find("FOM: min_bandwidth=") != std::string::npos);
}

TEST_CASE("loopback bandwidth is stable when repetitions double") {
  BisectionConfig cfg;
  cfg.process_count = 2;
  cfg.message_bytes = 4 << 20;
  cfg.repetitions = 4;
  const auto a = median_pair_bandwidth(cfg);
  cfg.repetitions = 8;
  const auto b = median_pair_bandwidth(cfg);
  CHECK(b >= 0.5 * a);
  CHECK(b <= 1.5 * a);
}

TEST_CASE("triad closed form") {
  std::vector<double> a(8, 0.0), b(8), c(8, 1.0);
  for (int i = 0; i < 8; ++i) b[i] = i;
  triad_kernel(a, b, c, 2.0, 1);
  for (int i = 0; i < 8; ++i) CHECK(a[i] == i + 2.0);
  CHECK(triad_verify(a, 2.0));
  a[3] = 0;
  CHECK_FALSE(triad_verify(a, 2.0));
  const auto r = run_triad({8, 1, 2.0});
  CHECK(r.verified);
  CHECK_THROWS_AS(run_triad({8, 0, 2.0}), WorkloadError);
  CHECK_THROWS_AS(triad_config_from(parse_workload_args({"--repetitions", "0"})), WorkloadError);
}

TEST_CASE("triad bandwidth is positive and finite") {
  Rng rng(97);
  for (int i = 0; i < 50; ++i) {
    const TriadConfig cfg{static_cast<std::size_t>(testsupport::uniform_int(rng, 1, 100000)),
                          testsupport::uniform_int(rng, 1, 5), testsupport::uniform_real(rng, -4, 4)};
    const auto r = run_triad(cfg);
    CHECK(r.verified);
    CHECK(std::isfinite(r.bytes_per_second));
    CHECK(r.bytes_per_second > 0.0);
  }
}

TEST_CASE("workload argument parsing") {
  const auto args = parse_workload_args({"--serial", "2", "--parallel=16", "--seed", "3"});
  const auto cfg = amdahl_config_from(args);
  CHECK(cfg.serial_seconds == 2.0);
  CHECK(cfg.parallel_seconds == 16.0);
  CHECK(cfg.seed == 3);
  CHECK_THROWS_AS(amdahl_config_from(parse_workload_args({"--bogus", "1"})), WorkloadError);
  CHECK_THROWS_AS(parse_workload_args({"stray"}), WorkloadError);
  CHECK_THROWS_AS(bisection_config_from(parse_workload_args({"--processes", "3"})), WorkloadError);
  CHECK(bisection_config_from({}).message_bytes == 16u << 20);
  CHECK(workload_nodes(parse_workload_args({"--nodes", "12"})) == 12);
}

TEST_CASE("command splitting") {
  CHECK(split_command("a 'b c' \"d\\\"e\" f\\ g") == std::vector<std::string>{"a", "b c", "d\"e", "f g"});
  CHECK(split_command("   ").empty());
  CHECK_THROWS_AS(split_command("a 'b"), WorkloadError);
}

TEST_CASE("simulated workloads") {
  CHECK_FALSE(simulate_workload({"gromacs"}, 1, 0));
  const auto triad = simulate_workload(split_command("bench-triad --length 1000 --model-bandwidth 1e9"), 1, 0);
  REQUIRE(triad);
  CHECK(triad->stdout_text.find("verification: passed") != std::string::npos);
  CHECK(triad->stdout_text.find("FOM: bandwidth=1e+09 B/s") != std::string::npos);
  const auto bis = simulate_workload(split_command("/opt/bin/bench-bisection --processes 6"), 1, 5);
  REQUIRE(bis);
  CHECK(bis->exit_status == 0);
  CHECK(bis->stdout_text.find("pair 2 5:") != std::string::npos);
  const auto bad = simulate_workload(split_command("bench-amdahl --serial -1"), 1, 0);
  REQUIRE(bad);
  CHECK(bad->exit_status != 0);
}

TEST_CASE("seed mixing") {
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  for (std::uint64_t s : {0ULL, 1ULL, ~0ULL}) {
    const auto u = unit_interval(s);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
