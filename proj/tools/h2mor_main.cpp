#include <iostream>

#include "h2mor/cli.hpp"

int main(int argc, char** argv) {
  return h2mor::cli::run(argc, argv, std::cout, std::cerr);
}
