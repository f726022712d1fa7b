#include <iostream>

#include "valsim/commands.hpp"

int main(int argc, char** argv) { return valsim::run_cli(argc, argv, std::cout, std::cerr); }
