// Regenerates tests/data/golden.led.
#include <iostream>

#include "test_util.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_golden OUT.led\n";
    return 1;
  }
  testutil::golden_dump().write(argv[1]);
  return 0;
}
