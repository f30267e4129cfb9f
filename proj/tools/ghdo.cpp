#include <iostream>

#include "ghdo/cli.hpp"

int main(int argc, char** argv) { return ghdo::cli::run_main(argc, argv, std::cout, std::cerr); }
