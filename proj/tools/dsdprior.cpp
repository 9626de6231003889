#include <iostream>

#include "dsd/cli.hpp"

int main(int argc, char** argv) { return dsd::cli::main_entry(argc, argv, std::cout, std::cerr); }
