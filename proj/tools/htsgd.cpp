#include <iostream>

#include "htsgd/cli.hpp"

int main(int argc, char** argv) { return htsgd::cli::main_entry(argc, argv, std::cout, std::cerr); }
