#include <iostream>

#include "chiploop/cli.hpp"

int main(int argc, char** argv) { return chiploop::cli::run(argc, argv, std::cout, std::cerr); }
