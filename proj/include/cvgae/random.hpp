//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "cvgae/tensor.hpp"

namespace cvgae {

/// Every stochastic component draws from an explicitly passed engine so that
/// runs are reproducible from a seed and resumable from a saved state.
using Rng = std::mt19937_64;

double standard_normal(Rng &rng);
double uniform01(Rng &rng);
Tensor normal_tensor(std::size_t rows, std::size_t cols, Rng &rng);

std::string save_rng_state(const Rng &rng);
Rng load_rng_state(const std::string &state);

}  // namespace cvgae
