// Amdahl-model sleeper: sleeps t_s + t_p / N and prints the FOM line.

#include <iostream>

#include "benchkit/workloads.hpp"

int main(int argc, char** argv) {
  try {
    const auto args = benchkit::parse_workload_args({argv + 1, argv + argc});
    const auto config = benchkit::amdahl_config_from(args);
    const auto mode = args.count("mode") && args.at("mode") == "compute" ? benchkit::AmdahlMode::compute
                                                                          : benchkit::AmdahlMode::sleep;
    std::cout << benchkit::run_amdahl(config, benchkit::workload_nodes(args), mode) << std::endl;
    return 0;
  } catch (const benchkit::WorkloadError& e) {
    std::cerr << "bench-amdahl: " << e.what() << "\n";
    return 2;
  }
}
