#include <iostream>

#include "plexus_cli/cli.hpp"

int main(int argc, char** argv) { return plexus::cli::run(argc, argv, std::cout, std::cerr); }
