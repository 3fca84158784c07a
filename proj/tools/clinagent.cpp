#include <iostream>
#include <string>
#include <vector>

#include "clinagent/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return clinagent::run_cli(args, std::cout, std::cerr);
}
