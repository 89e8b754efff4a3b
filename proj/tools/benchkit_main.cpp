#include <iostream>

#include "benchkit/cli.hpp"

int main(int argc, char** argv) { return benchkit::cli_main(argc, argv, std::cout, std::cerr); }
