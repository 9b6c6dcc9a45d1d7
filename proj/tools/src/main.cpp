#include <iostream>

#include "coxam_cli/cli.hpp"

int main(int argc, char** argv) { return coxam::cli::run_cli(argc, argv, std::cout, std::cerr); }
