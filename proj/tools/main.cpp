#include <iostream>

#include "flowsplat/commands.hpp"

int main(int argc, char** argv) { return flowsplat::cli::run(argc, argv, std::cout, std::cerr); }
