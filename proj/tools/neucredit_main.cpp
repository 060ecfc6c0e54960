#include <iostream>

#include "neucredit/cli.hpp"

int main(int argc, char** argv) { return neucredit::run_cli(argc, argv, std::cout, std::cerr); }
