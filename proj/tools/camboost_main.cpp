#include <iostream>
#include <string>
#include <vector>

#include "camboost/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return camboost::run_cli(args, std::cout, std::cerr);
}
