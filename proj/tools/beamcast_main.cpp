// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "beamcast/cli.hpp"

int main(int argc, char** argv) {
  return beamcast::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
