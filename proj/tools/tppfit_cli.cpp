#include <iostream>

#include "tppfit/cli.hpp"

int main(int argc, char** argv) { return tppfit::run_cli(argc, argv, std::cout, std::cerr); }
