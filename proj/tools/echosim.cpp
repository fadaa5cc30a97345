#include <iostream>

#include "echosim/cli.hpp"

int main(int argc, char** argv) { return echosim::cli_dispatch(argc, argv, std::cout, std::cerr); }
