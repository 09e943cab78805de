#include <iostream>
#include <string>
#include <vector>

#include "stokes_bie/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return stokes_bie::run_cli(args, std::cout, std::cerr);
}
