//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include <iostream>

#include "cvgae/cli.hpp"

int main(int argc, char **argv) {
  return cvgae::run_cli(argc, argv, std::cout, std::cerr);
}
