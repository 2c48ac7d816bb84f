#include <iostream>
#include <string>
#include <vector>

#include "mobstat/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mobstat::cli::run_command(args, std::cout, std::cerr);
}
