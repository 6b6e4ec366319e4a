#include <iostream>

#include "ttxai/cli.hpp"

int main(int argc, char** argv) { return ttxai::run_cli(argc, argv, std::cout, std::cerr); }
