#include <iostream>

#include "cellmech/cli.hpp"

int main(int argc, char** argv) {
  return cellmech::cli::run_cli(argc, argv, std::cout, std::cerr);
}
