#include <iostream>

#include "polyproc_cli/commands.hpp"

int main(int argc, char** argv) { return polyproc::cli::run(argc, argv, std::cout, std::cerr); }
