#include <iostream>
#include <string>
#include <vector>

#include "netgnn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return netgnn::run_cli(args, std::cout, std::cerr);
}
