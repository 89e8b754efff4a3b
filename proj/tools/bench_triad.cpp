#include <iostream>

#include "benchkit/workloads.hpp"

int main(int argc, char** argv) {
  try {
    const auto args = benchkit::parse_workload_args({argv + 1, argv + argc});
    if (args.count("model-bandwidth")) throw benchkit::WorkloadError("--model-bandwidth is simulation-only");
    const auto config = benchkit::triad_config_from(args);
    const auto result = benchkit::run_triad(config);
    std::cout << "Triad: length=" << config.array_length << " repetitions=" << config.repetitions << "\n"
              << benchkit::format_triad(result) << std::flush;
    return result.verified ? 0 : 1;
  } catch (const benchkit::WorkloadError& e) {
    std::cerr << "bench-triad: " << e.what() << "\n";
    return 2;
  }
}
