#include <iostream>

#include "lrb/cli.hpp"

int main(int argc, char** argv) { return lrb::run_cli(argc, argv, std::cout, std::cerr); }
