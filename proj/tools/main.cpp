#include "hourlasso/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hourlasso::cli::run(argc, argv, std::cout, std::cerr); }
