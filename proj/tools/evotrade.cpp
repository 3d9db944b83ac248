#include <iostream>

#include "evotrade/cli.hpp"

int main(int argc, char** argv) { return evotrade::cli_main(argc, argv, std::cout, std::cerr); }
