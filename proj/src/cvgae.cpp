//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/cvgae.hpp"

#include <cmath>
#include <stdexcept>

#include "cvgae/align.hpp"

namespace cvgae {

using ad::Var;

namespace {
  constexpr const char *kNodeEmbed = "shared.node_embed";

  Tensor glorot_node_embed(std::size_t in, std::size_t out, Rng &rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor w(in, out);
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = dist(rng);
    return w;
  }
}  // namespace

void ModelConfig::validate() const {
  mpnn.validate();
  if (node_dim == 0 || edge_dim == 0)
    throw std::invalid_argument("model config: feature widths must be >= 1");
}

Model::Model(const ModelConfig &config): config_(config) {
  config_.validate();
  Rng rng(config_.init_seed);
  const std::size_t d = config_.mpnn.hidden;
  params_.add(kNodeEmbed, glorot_node_embed(config_.node_dim, d, rng));
  add_network(params_, "prior", config_.mpnn, config_.edge_dim,
              config_.latent_dim(), true, rng);
  add_network(params_, "posterior", config_.mpnn, config_.edge_dim + 1,
              config_.latent_dim(), true, rng);
  add_network(params_, "likelihood", config_.mpnn, config_.edge_dim, 3, false,
              rng);
  locate();
}

Model::Model(const ModelConfig &config, ad::ParamStore params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  const Model reference(config_);
  const auto &want = reference.params();
  if (want.size() != params_.size())
    throw std::invalid_argument("parameter set does not match model config");
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want.name(i) != params_.name(i)
        || want.value(i).shape() != params_.value(i).shape())
      throw std::invalid_argument("parameter '" + params_.name(i)
                                  + "' does not match model config");
  }
  locate();
}

void Model::locate() {
  node_embed_ = params_.index(kNodeEmbed);
  prior_ = find_network(params_, "prior", true);
  posterior_ = find_network(params_, "posterior", true);
  likelihood_ = find_network(params_, "likelihood", false);
}

BoundModel bind_model(ad::Tape &tape, const Model &model) {
  const auto &store = model.params();
  BoundModel b {
    &model,
    tape.parameter(store, model.node_embed()),
    bind_network(tape, store, model.prior()),
    bind_network(tape, store, model.posterior()),
    bind_network(tape, store, model.likelihood()),
  };
  return b;
}

GraphVars bind_graph(ad::Tape &tape, const GraphFeatures &features) {
  return GraphVars { tape.constant(features.node), tape.constant(features.edge),
                     features.pairs };
}

GaussianVars prior_forward(const BoundModel &model, const GraphVars &graph,
                           const DropoutSpec &dropout) {
  const NodeStates s0 = init_states(graph.node, graph.edge, graph.pairs,
                                    model.node_embed, model.prior);
  const Var h = run_mpnn(s0, model.prior, model.model->config().mpnn.rounds);
  return gaussian_head(h, model.prior, dropout);
}

GaussianVars posterior_forward(const BoundModel &model, const GraphVars &graph,
                               const Conformation &reference,
                               const DropoutSpec &dropout) {
  const std::size_t m = graph.node.rows();
  if (reference.size() != m)
    throw std::invalid_argument(
        "posterior_forward: reference conformation has wrong atom count");
  const Tensor dist = distance_matrix(reference);
  Tensor column(graph.pairs.size(), 1);
  for (std::size_t p = 0; p < graph.pairs.size(); ++p)
    column[p] = dist(graph.pairs[p].first, graph.pairs[p].second);
  const Var extra = graph.node.tape->constant(std::move(column));
  const NodeStates s0 =
      init_states(graph.node, graph.edge, graph.pairs, model.node_embed,
                  model.posterior, std::nullopt, extra);
  const Var h =
      run_mpnn(s0, model.posterior, model.model->config().mpnn.rounds);
  return gaussian_head(h, model.posterior, dropout);
}

GaussianVars likelihood_forward(const BoundModel &model, const GraphVars &graph,
                                Var latents, const DropoutSpec &dropout) {
  const auto &cfg = model.model->config();
  if (latents.rows() != graph.node.rows() || latents.cols() != cfg.latent_dim())
    throw ShapeError("likelihood_forward: latents must be M x d_z");
  const NodeStates s0 = init_states(graph.node, graph.edge, graph.pairs,
                                    model.node_embed, model.likelihood, latents);
  const Var h = run_mpnn(s0, model.likelihood, cfg.mpnn.rounds);
  return gaussian_head(h, model.likelihood, dropout);
}

GaussianSet prior_forward(const Model &model, const GraphFeatures &features) {
  ad::Tape tape;
  const BoundModel b = bind_model(tape, model);
  return prior_forward(b, bind_graph(tape, features)).values();
}

GaussianSet posterior_forward(const Model &model, const GraphFeatures &features,
                              const Conformation &reference) {
  ad::Tape tape;
  const BoundModel b = bind_model(tape, model);
  return posterior_forward(b, bind_graph(tape, features), reference).values();
}

GaussianSet likelihood_forward(const Model &model, const GraphFeatures &features,
                               const Tensor &latents) {
  ad::Tape tape;
  const BoundModel b = bind_model(tape, model);
  return likelihood_forward(b, bind_graph(tape, features),
                            tape.constant(latents))
      .values();
}

ElboBreakdown ElboVars::values() const {
  return ElboBreakdown { recon.value().item(), kl_post_prior.value().item(),
                         kl_prior_uncond.value().item(), total.value().item() };
}

ElboVars elbo_loss(const BoundModel &model, const GraphVars &graph,
                   const Conformation &reference, double alpha, Rng &rng,
                   double dropout_rate) {
  if (alpha < 0.0)
    throw std::invalid_argument("elbo_loss: alpha must be >= 0");
  const DropoutSpec dropout { dropout_rate, dropout_rate > 0.0 ? &rng : nullptr };

  const GaussianVars prior = prior_forward(model, graph, dropout);
  const GaussianVars post = posterior_forward(model, graph, reference, dropout);
  const Tensor noise = normal_tensor(post.mean.rows(), post.mean.cols(), rng);
  const Var z = ad::reparam_sample_logvar(post.mean, post.log_variance, noise);
  const GaussianVars coords = likelihood_forward(model, graph, z, dropout);

  ElboVars out;
  out.recon = aligned_loglik(coords, reference);
  out.kl_post_prior = kl_diag(post, prior);
  out.kl_prior_uncond = kl_unconditional(prior);
  out.total = ad::sub(ad::sub(out.recon, out.kl_post_prior),
                      ad::scale(out.kl_prior_uncond, alpha));
  return out;
}

ElboBreakdown elbo_values(const Model &model, const GraphFeatures &features,
                          const Conformation &reference, double alpha,
                          Rng &rng) {
  ad::Tape tape;
  const BoundModel b = bind_model(tape, model);
  return elbo_loss(b, bind_graph(tape, features), reference, alpha, rng)
      .values();
}

ad::GradCheckReport elbo_grad_check(
    Model &model, const GraphFeatures &features, const Conformation &reference,
    double alpha, std::uint64_t noise_seed, double h,
    const std::function<void(std::vector<Tensor> &)> &analytic_hook) {
  const ad::ModelFn fn = [&](ad::Tape &tape, const ad::ParamStore &) {
    Rng rng(noise_seed);
    const BoundModel b = bind_model(tape, model);
    return elbo_loss(b, bind_graph(tape, features), reference, alpha, rng).total;
  };
  return ad::grad_check(fn, model.params(), h, analytic_hook);
}

std::vector<Conformation> sample_conformations(const Model &model,
                                               const GraphFeatures &features,
                                               std::size_t count, Rng &rng,
                                               const SampleOptions &opts) {
  if (count == 0)
    throw std::invalid_argument("sample_conformations: count must be >= 1");
  const GaussianSet prior = prior_forward(model, features);
  Tensor sd = prior.variance;
  for (std::size_t i = 0; i < sd.size(); ++i)
    sd[i] = opts.zero_prior_variance ? 0.0 : std::sqrt(sd[i]);

  std::vector<Conformation> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Tensor z = prior.mean;
    const Tensor noise = normal_tensor(z.rows(), z.cols(), rng);
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] += sd[i] * noise[i];
    out.push_back(to_conformation(likelihood_forward(model, features, z).mean));
  }
  return out;
}

}  // namespace cvgae
