#include <iostream>

#include "alamp/cli.hpp"

int main(int argc, char** argv) { return alamp::cli::main(argc, argv, std::cout, std::cerr); }
