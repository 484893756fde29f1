#include "rcsbp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return rcsbp::run_cli(argc, argv, std::cout, std::cerr); }
