#include <iostream>
#include <string>
#include <vector>

#include "calderon/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return calderon::run_cli(args, std::cout, std::cerr);
}
