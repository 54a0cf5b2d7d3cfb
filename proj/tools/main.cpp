#include <iostream>
#include <string>
#include <vector>

#include "mmax/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mmax::run_cli(args, std::cout, std::cerr);
}
