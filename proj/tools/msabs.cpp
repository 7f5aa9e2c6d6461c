#include <iostream>

#include "msabs/cli.hpp"

int main(int argc, char** argv) { return msabs::run_cli(argc, argv, std::cout, std::cerr); }
