#include <iostream>
#include <string>
#include <vector>

#include "m2l_cli/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return m2l::cli::run_cli(args, std::cout, std::cerr);
}
