#include <iostream>
#include <string>
#include <vector>

#include "dpaudit/cli.hpp"

int main(int argc, char** argv) {
  return dpaudit::run_command(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
