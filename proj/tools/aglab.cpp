#include <iostream>

#include "aglab/cli.hpp"

int main(int argc, char** argv) { return aglab::cli::run(argc, argv, std::cout, std::cerr); }
