#include <iostream>

#include "styleprobe/cli.hpp"

int main(int argc, char** argv) {
  return styleprobe::cli::run(argc, argv, std::cout, std::cerr);
}
