#include <iostream>
#include <string>
#include <vector>

#include "scope_refine/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return scope_refine::cli::run_cli(args, std::cin, std::cout, std::cerr);
}
