#include <iostream>
#include <string>
#include <vector>

#include "motif/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return motif::cli::run(args, std::cout, std::cerr);
}
