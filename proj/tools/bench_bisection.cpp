// Loopback bisection test: endpoints i and i + P/2 exchange messages in parallel.

#include <iostream>

#include "benchkit/workloads.hpp"

int main(int argc, char** argv) {
  try {
    const auto args = benchkit::parse_workload_args({argv + 1, argv + argc});
    if (args.count("model-bandwidth")) throw benchkit::WorkloadError("--model-bandwidth is simulation-only");
    const auto result = benchkit::run_bisection(benchkit::bisection_config_from(args));
    std::cout << benchkit::format_bisection(result) << std::flush;
    return 0;
  } catch (const benchkit::WorkloadError& e) {
    std::cerr << "bench-bisection: " << e.what() << "\n";
    return 1;
  }
}
