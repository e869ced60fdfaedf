#include <iostream>

#include "duelbench_cli/cli.hpp"

int main(int argc, char** argv) { return duelbench::cli::run(argc, argv, std::cout, std::cerr); }
