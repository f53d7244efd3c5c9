#include <iostream>

#include "bernreg/cli.hpp"

int main(int argc, char** argv) { return bernreg::run_cli(argc, argv, std::cout, std::cerr); }
