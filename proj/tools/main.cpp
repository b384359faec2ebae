// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "morkit/cli.hpp"

int main(int argc, char** argv) {
  return morkit::run_cli(argc, argv, std::cout, std::cerr);
}
