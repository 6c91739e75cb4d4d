#include "swarmopt/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return swarmopt::cli::main_entry(argc, argv, std::cout, std::cerr); }
