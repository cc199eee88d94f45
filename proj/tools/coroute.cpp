#include <iostream>
#include <string>
#include <vector>

#include "coroute/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return coroute::run_cli(args, std::cout, std::cerr);
}
