#include <iostream>

#include "gpelab/cli.hpp"

int main(int argc, char** argv) { return gpelab::run_cli(argc, argv, std::cout, std::cerr); }
