#include <iostream>

#include "sparsepr/cli.hpp"

int main(int argc, char** argv) { return sparsepr::cli_main(argc, argv, std::cout, std::cerr); }
