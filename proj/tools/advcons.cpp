#include <iostream>
#include <string>
#include <vector>

#include "advcons/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return advcons::run_cli(args, std::cout, std::cerr);
}
