#include <iostream>
#include <string>
#include <vector>

#include "intentrl/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return intentrl::run_cli(args, std::cout, std::cerr);
}
