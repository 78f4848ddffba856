#include <iostream>

#include "polyfa/cli.hpp"

int main(int argc, char** argv) {
  return polyfa::run_cli(argc, argv, std::cout, std::cerr);
}
