//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/random.hpp"

#include <sstream>
#include <stdexcept>

namespace cvgae {

// Distributions are constructed per draw so that no hidden cached variate
// lives outside the engine state.
double standard_normal(Rng &rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

double uniform01(Rng &rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

Tensor normal_tensor(std::size_t rows, std::size_t cols, Rng &rng) {
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = standard_normal(rng);
  return t;
}

std::string save_rng_state(const Rng &rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng load_rng_state(const std::string &state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (!is)
    throw std::runtime_error("corrupt rng state");
  return rng;
}

}  // namespace cvgae
