#include <iostream>

#include "invman/cli.hpp"

int main(int argc, char** argv) { return invman::run(argc, argv, std::cout, std::cerr); }
