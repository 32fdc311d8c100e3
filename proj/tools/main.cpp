#include <iostream>

#include "mda/cli.hpp"

int main(int argc, char** argv) { return mda::cli::run(argc, argv, std::cout, std::cerr); }
