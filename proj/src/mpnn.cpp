//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/mpnn.hpp"

#include <cmath>
#include <stdexcept>

namespace cvgae {

using ad::Var;

void MpnnConfig::validate() const {
  if (rounds < 1 || hidden < 1 || head_hidden < 1)
    throw std::invalid_argument(
        "mpnn config: rounds, hidden and head_hidden must all be >= 1");
}

namespace {
  Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng &rng) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w(fan_in, fan_out);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = dist(rng);
    return w;
  }

  Var linear(Var x, Var w, Var b) {
    return ad::add_bias(ad::matmul(x, w), b);
  }

  Var dropout(Var x, const DropoutSpec &spec) {
    if (!spec.active())
      return x;
    const double keep = 1.0 - spec.rate;
    Tensor mask(x.rows(), x.cols());
    for (std::size_t i = 0; i < mask.size(); ++i)
      mask[i] = uniform01(*spec.rng) < spec.rate ? 0.0 : 1.0 / keep;
    return ad::mul(x, x.tape->constant(std::move(mask)));
  }
}  // namespace

NetworkParams add_network(ad::ParamStore &store, const std::string &prefix,
                          const MpnnConfig &config, std::size_t edge_input_dim,
                          std::size_t out_dim, bool variance_head, Rng &rng) {
  config.validate();
  const std::size_t d = config.hidden;
  const std::size_t f = config.head_hidden;
  auto w = [&](const char *name, std::size_t in, std::size_t out) {
    return store.add(prefix + "." + name, glorot(in, out, rng));
  };
  auto b = [&](const char *name, std::size_t out) {
    return store.add(prefix + "." + name, Tensor(1, out));
  };

  NetworkParams p {};
  p.edge_embed = w("edge_embed", edge_input_dim, d * d);
  p.message_w = w("message.weight", 2 * d, d);
  p.message_b = b("message.bias", d);
  p.update_w = w("gru.update.w", d, d);
  p.update_u = w("gru.update.u", d, d);
  p.update_b = b("gru.update.bias", d);
  p.reset_w = w("gru.reset.w", d, d);
  p.reset_u = w("gru.reset.u", d, d);
  p.reset_b = b("gru.reset.bias", d);
  p.cand_w = w("gru.candidate.w", d, d);
  p.cand_u = w("gru.candidate.u", d, d);
  p.cand_b = b("gru.candidate.bias", d);
  p.head_w1 = w("head.w1", d, f);
  p.head_b1 = b("head.b1", f);
  p.head_w2 = w("head.w2", f, f);
  p.head_b2 = b("head.b2", f);
  p.mean_w = w("mean.weight", f, out_dim);
  p.mean_b = b("mean.bias", out_dim);
  if (variance_head) {
    p.logvar_w = w("logvar.weight", f, out_dim);
    p.logvar_b = b("logvar.bias", out_dim);
  }
  return p;
}

NetworkParams find_network(const ad::ParamStore &store,
                           const std::string &prefix, bool variance_head) {
  auto at = [&](const char *name) { return store.index(prefix + "." + name); };
  NetworkParams p {};
  p.edge_embed = at("edge_embed");
  p.message_w = at("message.weight");
  p.message_b = at("message.bias");
  p.update_w = at("gru.update.w");
  p.update_u = at("gru.update.u");
  p.update_b = at("gru.update.bias");
  p.reset_w = at("gru.reset.w");
  p.reset_u = at("gru.reset.u");
  p.reset_b = at("gru.reset.bias");
  p.cand_w = at("gru.candidate.w");
  p.cand_u = at("gru.candidate.u");
  p.cand_b = at("gru.candidate.bias");
  p.head_w1 = at("head.w1");
  p.head_b1 = at("head.b1");
  p.head_w2 = at("head.w2");
  p.head_b2 = at("head.b2");
  p.mean_w = at("mean.weight");
  p.mean_b = at("mean.bias");
  if (variance_head) {
    p.logvar_w = at("logvar.weight");
    p.logvar_b = at("logvar.bias");
  }
  return p;
}

NetworkVars bind_network(ad::Tape &tape, const ad::ParamStore &store,
                         const NetworkParams &net) {
  auto v = [&](std::size_t i) { return tape.parameter(store, i); };
  NetworkVars out {
    v(net.edge_embed), v(net.message_w), v(net.message_b), v(net.update_w),
    v(net.update_u),   v(net.update_b),  v(net.reset_w),   v(net.reset_u),
    v(net.reset_b),    v(net.cand_w),    v(net.cand_u),    v(net.cand_b),
    v(net.head_w1),    v(net.head_b1),   v(net.head_w2),   v(net.head_b2),
    v(net.mean_w),     v(net.mean_b),    std::nullopt,     std::nullopt,
  };
  if (net.logvar_w) {
    out.logvar_w = v(*net.logvar_w);
    out.logvar_b = v(*net.logvar_b);
  }
  return out;
}

NodeStates init_states(Var node_features, Var edge_features, PairList pairs,
                       Var node_embed, const NetworkVars &net,
                       std::optional<Var> extra_node_term,
                       std::optional<Var> extra_edge_column) {
  if (edge_features.rows() != pairs.size())
    throw ShapeError("init_states: edge features do not match pair count");
  Var h = ad::matmul(node_features, node_embed);
  if (extra_node_term)
    h = ad::add(h, *extra_node_term);
  Var edge_in = extra_edge_column ? ad::concat_cols(edge_features,
                                                    *extra_edge_column)
                                  : edge_features;
  Var edge_h = ad::matmul(edge_in, net.edge_embed);
  return NodeStates { h, edge_h, pairs };
}

NodeStates message_pass_round(const NodeStates &states, const NetworkVars &net) {
  Var h = states.h;
  Var neighbours = ad::edge_aggregate(states.edge_h, h, states.pairs);
  Var m = linear(ad::concat_cols(h, neighbours), net.message_w, net.message_b);

  Var update = ad::sigmoid(ad::add_bias(
      ad::add(ad::matmul(m, net.update_w), ad::matmul(h, net.update_u)),
      net.update_b));
  Var reset = ad::sigmoid(ad::add_bias(
      ad::add(ad::matmul(m, net.reset_w), ad::matmul(h, net.reset_u)),
      net.reset_b));
  Var cand = ad::tanh(ad::add_bias(
      ad::add(ad::matmul(m, net.cand_w),
              ad::matmul(ad::mul(reset, h), net.cand_u)),
      net.cand_b));
  // h' = (1 - z) * h + z * h~  ==  h + z * (h~ - h)
  Var next = ad::add(h, ad::mul(update, ad::sub(cand, h)));
  return NodeStates { next, states.edge_h, states.pairs };
}

Var run_mpnn(const NodeStates &initial, const NetworkVars &net,
             std::size_t rounds) {
  NodeStates s = initial;
  for (std::size_t l = 0; l < rounds; ++l)
    s = message_pass_round(s, net);
  return s.h;
}

GaussianVars gaussian_head(Var h, const NetworkVars &net,
                           const DropoutSpec &dropout_spec) {
  Var a1 = dropout(ad::tanh(linear(h, net.head_w1, net.head_b1)), dropout_spec);
  Var a2 = dropout(ad::tanh(linear(a1, net.head_w2, net.head_b2)), dropout_spec);
  Var mean = linear(a2, net.mean_w, net.mean_b);
  Var log_variance =
      net.logvar_w ? linear(a2, *net.logvar_w, *net.logvar_b)
                   : h.tape->constant(Tensor(mean.rows(), mean.cols()));
  return GaussianVars { mean, log_variance };
}

}  // namespace cvgae
