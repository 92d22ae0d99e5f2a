#include <iostream>

#include "distillery/cli.hpp"

int main(int argc, char** argv) { return distillery::cli::run_cli(argc, argv, std::cout, std::cerr); }
