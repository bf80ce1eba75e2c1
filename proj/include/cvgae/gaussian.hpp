//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include "cvgae/autodiff.hpp"
#include "cvgae/molgraph.hpp"
#include "cvgae/tensor.hpp"

namespace cvgae {

/// Per-node diagonal Gaussians: row i holds the mean and variance vectors of
/// node i.
struct GaussianSet {
  Tensor mean;
  Tensor variance;

  /// Throws std::invalid_argument unless shapes agree and every variance is
  /// strictly positive.
  void validate() const;
};

/// Tape-side Gaussian set. Variances are carried as log-variances.
struct GaussianVars {
  ad::Var mean;
  ad::Var log_variance;

  ad::Var variance() const { return ad::exp(log_variance); }
  GaussianSet values() const;
};

/// Binds a value-level set onto a tape as constants.
GaussianVars constant_gaussian(ad::Tape &tape, const GaussianSet &g);

/// Sum over nodes and components of KL(q_ij || p_ij) for univariate normals.
ad::Var kl_diag(const GaussianVars &q, const GaussianVars &p);

/// KL(p || N(0, I)).
ad::Var kl_unconditional(const GaussianVars &p);

/// Log-density of @p x under the factorized Gaussian @p g.
ad::Var gaussian_loglik(ad::Var x, const GaussianVars &g);

double kl_diag(const GaussianSet &q, const GaussianSet &p);
double kl_unconditional(const GaussianSet &p);
double gaussian_loglik(const Tensor &x, const GaussianSet &g);

Tensor to_tensor(const Conformation &conf);
Conformation to_conformation(const Tensor &coords);

}  // namespace cvgae
