#include <iostream>

#include "nlwm/cli.hpp"

int main(int argc, char** argv) { return nlwm::run_cli(argc, argv, std::cout, std::cerr); }
