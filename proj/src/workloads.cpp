#include "benchkit/workloads.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <arpa/inet.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <thread>

#include "benchkit/numbers.hpp"

namespace benchkit {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_interval(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double amdahl_time(const AmdahlConfig& config, int nodes) {
  if (nodes < 1) throw WorkloadError("node count must be >= 1");
  if (!(config.serial_seconds >= 0.0) || !(config.parallel_seconds >= 0.0)) {
    throw WorkloadError("serial and parallel times must be non-negative");
  }
  if (!(config.noise_fraction >= 0.0 && config.noise_fraction < 1.0)) {
    throw WorkloadError("noise fraction must be in [0, 1)");
  }
  double factor = 1.0;
  if (config.noise_fraction > 0.0) {
    const auto u = 2.0 * unit_interval(mix_seed(config.seed, static_cast<std::uint64_t>(nodes))) - 1.0;
    factor += config.noise_fraction * u;
  }
  return config.serial_seconds + config.parallel_seconds / nodes * factor;
}

std::string run_amdahl(const AmdahlConfig& config, int nodes, AmdahlMode mode) {
  const auto seconds = amdahl_time(config, nodes);
  if (mode == AmdahlMode::sleep) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  return "FOM: time=" + format_seconds(seconds) + " s";
}

std::vector<std::pair<int, int>> pair_bisection(int process_count) {
  if (process_count < 2 || process_count % 2 != 0) {
    throw WorkloadError("bisection needs an even, positive process count");
  }
  const int half = process_count / 2;
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(half));
  for (int i = 0; i < half; ++i) pairs.emplace_back(i, i + half);
  return pairs;
}

double bisection_minimum(const std::vector<PairBandwidth>& pairs) {
  if (pairs.empty()) throw WorkloadError("no pairs measured");
  return std::min_element(pairs.begin(), pairs.end(),
                          [](const auto& a, const auto& b) { return a.bytes_per_second < b.bytes_per_second; })
      ->bytes_per_second;
}

namespace {

constexpr std::size_t kChunk = std::size_t{1} << 20;

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { reset(); }

  int fd() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

[[noreturn]] void sys_fail(const std::string& what) {
  const int err = errno;
  if (err == EAGAIN || err == EWOULDBLOCK) throw WorkloadError(what + ": timeout");
  throw WorkloadError(what + ": " + std::strerror(err));
}

void set_timeouts(int fd, double seconds) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(seconds);
  tv.tv_usec = static_cast<suseconds_t>((seconds - std::floor(seconds)) * 1e6);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

void send_all(int fd, std::size_t bytes) {
  static const std::vector<char> payload(kChunk, 'x');
  while (bytes > 0) {
    const auto n = ::send(fd, payload.data(), std::min(bytes, payload.size()), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("send");
    }
    bytes -= static_cast<std::size_t>(n);
  }
}

void recv_all(int fd, std::size_t bytes) {
  std::vector<char> buf(std::min(bytes, kChunk) + 1);
  while (bytes > 0) {
    const auto n = ::recv(fd, buf.data(), std::min(bytes, buf.size()), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("recv");
    }
    if (n == 0) throw WorkloadError("connection closed by partner");
    bytes -= static_cast<std::size_t>(n);
  }
}

// Connected socket pair over 127.0.0.1.
std::pair<Socket, Socket> loopback_pair(double timeout) {
  Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.fd() < 0) sys_fail("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listener.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) sys_fail("bind");
  if (::listen(listener.fd(), 1) < 0) sys_fail("listen");
  socklen_t len = sizeof addr;
  if (::getsockname(listener.fd(), reinterpret_cast<sockaddr*>(&addr), &len) < 0) sys_fail("getsockname");

  Socket client(::socket(AF_INET, SOCK_STREAM, 0));
  if (client.fd() < 0) sys_fail("socket");
  set_timeouts(client.fd(), timeout);
  if (::connect(client.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) sys_fail("connect");
  Socket server(::accept(listener.fd(), nullptr, nullptr));
  if (server.fd() < 0) sys_fail("accept");
  set_timeouts(server.fd(), timeout);
  return {std::move(client), std::move(server)};
}

// One endpoint of a pair. In bidirectional mode it sends and receives at the
// same time; otherwise the first endpoint sends and the second acknowledges.
void run_endpoint(int fd, bool sender, const BisectionConfig& cfg) {
  const auto total = cfg.message_bytes * static_cast<std::size_t>(cfg.repetitions);
  if (cfg.bidirectional) {
    std::exception_ptr send_error;
    std::thread tx([&] {
      try {
        send_all(fd, total);
      } catch (...) {
        send_error = std::current_exception();
      }
    });
    try {
      recv_all(fd, total);
    } catch (...) {
      ::shutdown(fd, SHUT_RDWR);
      tx.join();
      throw;
    }
    tx.join();
    if (send_error) std::rethrow_exception(send_error);
  } else if (sender) {
    send_all(fd, total);
    recv_all(fd, 1);
  } else {
    recv_all(fd, total);
    send_all(fd, 1);
  }
}

PairBandwidth measure_pair(int first, int second, const BisectionConfig& cfg) {
  auto [a, b] = loopback_pair(cfg.timeout_seconds);
  std::exception_ptr error_b;
  const auto start = std::chrono::steady_clock::now();
  std::thread tb([&, fd = b.fd()] {
    try {
      run_endpoint(fd, false, cfg);
    } catch (...) {
      error_b = std::current_exception();
    }
  });
  try {
    run_endpoint(a.fd(), true, cfg);
  } catch (...) {
    ::shutdown(b.fd(), SHUT_RDWR);
    tb.join();
    throw;
  }
  tb.join();
  if (error_b) std::rethrow_exception(error_b);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  PairBandwidth p;
  p.first = first;
  p.second = second;
  p.bytes = static_cast<double>(cfg.message_bytes) * cfg.repetitions * (cfg.bidirectional ? 2.0 : 1.0);
  p.seconds = std::max(elapsed, 1e-9);
  p.bytes_per_second = p.bytes / p.seconds;
  return p;
}

}  // namespace

BisectionResult run_bisection(const BisectionConfig& config) {
  if (config.message_bytes < 1) throw WorkloadError("message size must be positive");
  if (config.repetitions < 1) throw WorkloadError("repetitions must be positive");
  if (!(config.timeout_seconds > 0.0)) throw WorkloadError("timeout must be positive");
  const auto pairs = pair_bisection(config.process_count);

  BisectionResult result;
  result.pairs.resize(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  {
    std::vector<std::jthread> workers;
    workers.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          result.pairs[i] = measure_pair(pairs[i].first, pairs[i].second, config);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  result.min_bytes_per_second = bisection_minimum(result.pairs);
  return result;
}

void triad_kernel(std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c, double scalar,
                  int repetitions) {
  const auto n = a.size();
  for (int r = 0; r < repetitions; ++r) {
    for (std::size_t i = 0; i < n; ++i) a[i] = b[i] + scalar * c[i];
  }
}

bool triad_verify(const std::vector<double>& a, double scalar) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != static_cast<double>(i) + scalar) return false;
  }
  return true;
}

TriadResult run_triad(const TriadConfig& config) {
  if (config.array_length < 1) throw WorkloadError("array length must be positive");
  if (config.repetitions < 1) throw WorkloadError("repetitions must be positive");
  std::vector<double> a, b, c;
  try {
    a.assign(config.array_length, 0.0);
    b.resize(config.array_length);
    c.assign(config.array_length, 1.0);
  } catch (const std::bad_alloc&) {
    throw WorkloadError("cannot allocate triad arrays");
  }
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<double>(i);

  const auto start = std::chrono::steady_clock::now();
  triad_kernel(a, b, c, config.scalar, config.repetitions);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  TriadResult r;
  r.seconds = std::max(elapsed, 1e-9);
  r.bytes_per_second =
      3.0 * sizeof(double) * static_cast<double>(config.array_length) * config.repetitions / r.seconds;
  r.verified = triad_verify(a, config.scalar);
  return r;
}

WorkloadArgs parse_workload_args(const std::vector<std::string>& args) {
  WorkloadArgs out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& arg = args[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) throw WorkloadError("unexpected argument '" + arg + "'");
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      out[arg.substr(2, eq - 2)] = arg.substr(eq + 1);
    } else if (i + 1 < args.size() && args[i + 1].rfind("--", 0) != 0) {
      out[arg.substr(2)] = args[++i];
    } else {
      out[arg.substr(2)] = "1";
    }
  }
  return out;
}

namespace {

void check_known(const WorkloadArgs& args, std::initializer_list<std::string_view> known) {
  for (const auto& [key, _] : args) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw WorkloadError("unknown option '--" + key + "'");
    }
  }
}

double real_arg(const WorkloadArgs& args, const std::string& key, double fallback) {
  const auto it = args.find(key);
  if (it == args.end()) return fallback;
  const auto v = parse_real(it->second);
  if (!v) throw WorkloadError("option --" + key + " expects a number, got '" + it->second + "'");
  return *v;
}

std::int64_t int_arg(const WorkloadArgs& args, const std::string& key, std::int64_t fallback) {
  const auto v = real_arg(args, key, static_cast<double>(fallback));
  if (v != std::floor(v) || std::fabs(v) > 9.0e15) throw WorkloadError("option --" + key + " expects an integer");
  return static_cast<std::int64_t>(v);
}

bool flag_arg(const WorkloadArgs& args, const std::string& key, bool fallback) {
  const auto it = args.find(key);
  if (it == args.end()) return fallback;
  if (it->second == "1" || it->second == "true" || it->second == "yes") return true;
  if (it->second == "0" || it->second == "false" || it->second == "no") return false;
  throw WorkloadError("option --" + key + " expects a boolean");
}

}  // namespace

AmdahlConfig amdahl_config_from(const WorkloadArgs& args) {
  check_known(args, {"serial", "parallel", "noise", "seed", "nodes", "mode"});
  AmdahlConfig c;
  c.serial_seconds = real_arg(args, "serial", c.serial_seconds);
  c.parallel_seconds = real_arg(args, "parallel", c.parallel_seconds);
  c.noise_fraction = real_arg(args, "noise", c.noise_fraction);
  const auto seed = int_arg(args, "seed", 0);
  if (seed < 0) throw WorkloadError("seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  return c;
}

TriadConfig triad_config_from(const WorkloadArgs& args) {
  check_known(args, {"length", "repetitions", "scalar", "nodes", "model-bandwidth"});
  TriadConfig c;
  const auto length = int_arg(args, "length", static_cast<std::int64_t>(c.array_length));
  const auto reps = int_arg(args, "repetitions", c.repetitions);
  if (length < 1) throw WorkloadError("array length must be positive");
  if (reps < 1) throw WorkloadError("repetitions must be positive");
  c.array_length = static_cast<std::size_t>(length);
  c.repetitions = static_cast<int>(reps);
  c.scalar = real_arg(args, "scalar", c.scalar);
  return c;
}

BisectionConfig bisection_config_from(const WorkloadArgs& args) {
  check_known(args, {"processes", "message-bytes", "repetitions", "bidirectional", "timeout", "nodes",
                     "model-bandwidth"});
  BisectionConfig c;
  c.process_count = static_cast<int>(int_arg(args, "processes", c.process_count));
  const auto bytes = int_arg(args, "message-bytes", static_cast<std::int64_t>(c.message_bytes));
  if (bytes < 1) throw WorkloadError("message size must be positive");
  c.message_bytes = static_cast<std::size_t>(bytes);
  c.repetitions = static_cast<int>(int_arg(args, "repetitions", c.repetitions));
  c.bidirectional = flag_arg(args, "bidirectional", c.bidirectional);
  c.timeout_seconds = real_arg(args, "timeout", c.timeout_seconds);
  if (c.process_count < 2 || c.process_count % 2 != 0) throw WorkloadError("--processes must be even and >= 2");
  if (c.repetitions < 1) throw WorkloadError("repetitions must be positive");
  return c;
}

int workload_nodes(const WorkloadArgs& args) {
  std::int64_t nodes = 1;
  if (args.count("nodes")) {
    nodes = int_arg(args, "nodes", 1);
  } else if (const char* env = std::getenv("BENCH_NODES"); env && *env) {
    const auto v = parse_real(env);
    if (!v || *v != std::floor(*v)) throw WorkloadError("BENCH_NODES is not an integer");
    nodes = static_cast<std::int64_t>(*v);
  }
  if (nodes < 1 || nodes > std::numeric_limits<int>::max()) throw WorkloadError("node count must be >= 1");
  return static_cast<int>(nodes);
}

std::string format_triad(const TriadResult& result) {
  std::string out = std::string("verification: ") + (result.verified ? "passed" : "FAILED") + "\n";
  out += "FOM: bandwidth=" + format_real(result.bytes_per_second) + " B/s\n";
  return out;
}

std::string format_bisection(const BisectionResult& result) {
  std::string out;
  for (const auto& p : result.pairs) {
    out += "pair " + std::to_string(p.first) + " " + std::to_string(p.second) +
           ": bandwidth=" + format_real(p.bytes_per_second) + " B/s\n";
  }
  out += "FOM: min_bandwidth=" + format_real(result.min_bytes_per_second) + " B/s\n";
  return out;
}

std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> words;
  std::string current;
  bool in_word = false;
  char quote = 0;
  for (std::size_t i = 0; i < command.size(); ++i) {
    const char c = command[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < command.size()) {
        current.push_back(command[++i]);
      } else {
        current.push_back(c);
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == '\\' && i + 1 < command.size()) {
      current.push_back(command[++i]);
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) words.push_back(std::move(current));
      current.clear();
      in_word = false;
    } else {
      current.push_back(c);
      in_word = true;
    }
  }
  if (quote) throw WorkloadError("unterminated quote in command");
  if (in_word) words.push_back(std::move(current));
  return words;
}

std::optional<SimulatedRun> simulate_workload(const std::vector<std::string>& argv, int nodes, std::uint64_t seed) {
  if (argv.empty()) return std::nullopt;
  const auto program = std::filesystem::path(argv[0]).filename().string();
  if (program != "bench-amdahl" && program != "bench-triad" && program != "bench-bisection") return std::nullopt;

  SimulatedRun run;
  try {
    const auto args = parse_workload_args({argv.begin() + 1, argv.end()});
    if (args.count("nodes")) nodes = workload_nodes(args);
    if (program == "bench-amdahl") {
      auto cfg = amdahl_config_from(args);
      cfg.seed = mix_seed(seed, cfg.seed);
      run.seconds = amdahl_time(cfg, nodes);
      run.stdout_text = run_amdahl(cfg, nodes, AmdahlMode::compute) + "\n";
    } else if (program == "bench-triad") {
      const auto cfg = triad_config_from(args);
      const auto bandwidth = real_arg(args, "model-bandwidth", 1e11);
      if (!(bandwidth > 0.0)) throw WorkloadError("--model-bandwidth must be positive");
      TriadResult r;
      r.seconds = 3.0 * sizeof(double) * static_cast<double>(cfg.array_length) * cfg.repetitions / bandwidth;
      r.bytes_per_second = bandwidth;
      r.verified = true;
      run.seconds = r.seconds;
      run.stdout_text = format_triad(r);
    } else {
      const auto cfg = bisection_config_from(args);
      const auto bandwidth = real_arg(args, "model-bandwidth", 2.5e10);
      if (!(bandwidth > 0.0)) throw WorkloadError("--model-bandwidth must be positive");
      BisectionResult r;
      std::uint64_t index = 0;
      for (const auto& [a, b] : pair_bisection(cfg.process_count)) {
        PairBandwidth p{a, b};
        p.bytes = static_cast<double>(cfg.message_bytes) * cfg.repetitions * (cfg.bidirectional ? 2.0 : 1.0);
        p.bytes_per_second = bandwidth * (0.9 + 0.1 * unit_interval(mix_seed(seed, index++)));
        p.seconds = p.bytes / p.bytes_per_second;
        run.seconds = std::max(run.seconds, p.seconds);
        r.pairs.push_back(p);
      }
      r.min_bytes_per_second = bisection_minimum(r.pairs);
      run.stdout_text = format_bisection(r);
    }
  } catch (const WorkloadError& e) {
    run.exit_status = 2;
    run.stderr_text = program + ": " + e.what() + "\n";
  }
  return run;
}

}  // namespace benchkit
