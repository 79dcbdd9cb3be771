#include "soco_rcl_cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return soco::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
