#include "srdetect/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return srdetect::cli::run(argc, argv, std::cout, std::cerr); }
