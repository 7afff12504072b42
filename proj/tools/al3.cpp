#include <iostream>

#include "al3/cli.hpp"

int main(int argc, char** argv) {
  return al3::main_entry(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
