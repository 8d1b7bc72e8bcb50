#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return toolplan::cli::run(argc, argv, std::cout, std::cerr); }
