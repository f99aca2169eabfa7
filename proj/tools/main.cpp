#include <iostream>

#include "annmix/cli.hpp"

int main(int argc, char** argv) { return annmix::run_cli(argc, argv, std::cout, std::cerr); }
