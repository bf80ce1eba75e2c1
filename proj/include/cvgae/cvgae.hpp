//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "cvgae/autodiff.hpp"
#include "cvgae/gaussian.hpp"
#include "cvgae/molgraph.hpp"
#include "cvgae/mpnn.hpp"
#include "cvgae/random.hpp"

namespace cvgae {

struct ModelConfig {
  MpnnConfig mpnn;
  std::size_t node_dim = 0;
  std::size_t edge_dim = kEdgeClasses;
  std::uint64_t init_seed = 0;

  std::size_t latent_dim() const { return mpnn.hidden; }
  void validate() const;
  friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

/// Parameters of the three networks: prior P(Z|G), posterior Q(Z|G,X*) and
/// likelihood P(X|Z,G). The node embedding is a single tensor used by all
/// three. The likelihood head has no variance branch; its variance is 1.
class Model {
public:
  explicit Model(const ModelConfig &config);

  /// Adopts previously saved parameters; names and shapes must match
  /// @p config.
  Model(const ModelConfig &config, ad::ParamStore params);

  const ModelConfig &config() const { return config_; }
  ad::ParamStore &params() { return params_; }
  const ad::ParamStore &params() const { return params_; }

  std::size_t node_embed() const { return node_embed_; }
  const NetworkParams &prior() const { return prior_; }
  const NetworkParams &posterior() const { return posterior_; }
  const NetworkParams &likelihood() const { return likelihood_; }

private:
  void locate();

  ModelConfig config_;
  ad::ParamStore params_;
  std::size_t node_embed_ = 0;
  NetworkParams prior_ {};
  NetworkParams posterior_ {};
  NetworkParams likelihood_ {};
};

struct BoundModel {
  const Model *model;
  ad::Var node_embed;
  NetworkVars prior, posterior, likelihood;
};

BoundModel bind_model(ad::Tape &tape, const Model &model);

struct GraphVars {
  ad::Var node;
  ad::Var edge;
  PairList pairs;
};

GraphVars bind_graph(ad::Tape &tape, const GraphFeatures &features);

GaussianVars prior_forward(const BoundModel &model, const GraphVars &graph,
                           const DropoutSpec &dropout = {});

/// Same as the prior, except that each edge input is extended with the
/// reference inter-atomic distance.
GaussianVars posterior_forward(const BoundModel &model, const GraphVars &graph,
                               const Conformation &reference,
                               const DropoutSpec &dropout = {});

/// Coordinates given latents: h0 = node_features * U_node + z. The returned
/// variance is 1 everywhere.
GaussianVars likelihood_forward(const BoundModel &model, const GraphVars &graph,
                                ad::Var latents,
                                const DropoutSpec &dropout = {});

GaussianSet prior_forward(const Model &model, const GraphFeatures &features);
GaussianSet posterior_forward(const Model &model, const GraphFeatures &features,
                              const Conformation &reference);
GaussianSet likelihood_forward(const Model &model, const GraphFeatures &features,
                               const Tensor &latents);

struct ElboBreakdown {
  double recon = 0.0;
  double kl_post_prior = 0.0;
  double kl_prior_uncond = 0.0;
  double total = 0.0;
};

struct ElboVars {
  ad::Var recon;
  ad::Var kl_post_prior;
  ad::Var kl_prior_uncond;
  ad::Var total;

  ElboBreakdown values() const;
};

/// Single-sample objective for one molecule:
/// recon - KL(Q || P) - alpha * KL(P || N(0, I)), where recon is the
/// post-alignment log-likelihood of the reference under the likelihood
/// network fed with one reparameterized posterior sample. Posterior noise
/// and dropout masks are drawn from @p rng.
ElboVars elbo_loss(const BoundModel &model, const GraphVars &graph,
                   const Conformation &reference, double alpha, Rng &rng,
                   double dropout_rate = 0.0);

ElboBreakdown elbo_values(const Model &model, const GraphFeatures &features,
                          const Conformation &reference, double alpha,
                          Rng &rng);

/// Finite-difference check of the objective with fixed posterior noise (the
/// engine is reseeded from @p noise_seed for every evaluation) and no
/// dropout. Perturbs and restores the model's parameters in place.
ad::GradCheckReport elbo_grad_check(
    Model &model, const GraphFeatures &features, const Conformation &reference,
    double alpha, std::uint64_t noise_seed, double h = 1e-4,
    const std::function<void(std::vector<Tensor> &)> &analytic_hook = {});

struct SampleOptions {
  /// Test hook: use the prior means as latents, as if the prior variance
  /// were zero.
  bool zero_prior_variance = false;
};

/// Draws Z ~ P(Z|G) and returns the likelihood means, @p count times.
std::vector<Conformation> sample_conformations(const Model &model,
                                               const GraphFeatures &features,
                                               std::size_t count, Rng &rng,
                                               const SampleOptions &opts = {});

}  // namespace cvgae
