#include "sq/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sq::run_cli(argc, argv, std::cout, std::cerr); }
