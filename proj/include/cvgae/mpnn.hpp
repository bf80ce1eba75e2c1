//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "cvgae/autodiff.hpp"
#include "cvgae/gaussian.hpp"
#include "cvgae/random.hpp"

namespace cvgae {

struct MpnnConfig {
  std::size_t rounds = 3;        // L
  std::size_t hidden = 50;       // d_h, also the latent width d_z
  std::size_t head_hidden = 100; // d_f

  void validate() const;
  friend bool operator==(const MpnnConfig &, const MpnnConfig &) = default;
};

/// Store indices of one message passing network: edge embedding, the
/// aggregation layer, the GRU (shared across rounds) and the output head.
struct NetworkParams {
  std::size_t edge_embed;
  std::size_t message_w, message_b;
  std::size_t update_w, update_u, update_b;
  std::size_t reset_w, reset_u, reset_b;
  std::size_t cand_w, cand_u, cand_b;
  std::size_t head_w1, head_b1, head_w2, head_b2;
  std::size_t mean_w, mean_b;
  std::optional<std::size_t> logvar_w, logvar_b;
};

/// Registers a network named @p prefix in @p store. Weights are drawn
/// uniformly from +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
NetworkParams add_network(ad::ParamStore &store, const std::string &prefix,
                          const MpnnConfig &config, std::size_t edge_input_dim,
                          std::size_t out_dim, bool variance_head, Rng &rng);

/// Looks up an existing network's parameters by name.
NetworkParams find_network(const ad::ParamStore &store,
                           const std::string &prefix, bool variance_head);

struct NetworkVars {
  ad::Var edge_embed;
  ad::Var message_w, message_b;
  ad::Var update_w, update_u, update_b;
  ad::Var reset_w, reset_u, reset_b;
  ad::Var cand_w, cand_u, cand_b;
  ad::Var head_w1, head_b1, head_w2, head_b2;
  ad::Var mean_w, mean_b;
  std::optional<ad::Var> logvar_w, logvar_b;
};

NetworkVars bind_network(ad::Tape &tape, const ad::ParamStore &store,
                         const NetworkParams &net);

using PairList = std::span<const std::pair<std::size_t, std::size_t>>;

struct NodeStates {
  ad::Var h;       // M x d_h
  ad::Var edge_h;  // pairs x (d_h * d_h), fixed across rounds
  PairList pairs;
};

/// h0 = node_features * U_node (+ extra_node_term);
/// edge_h = [edge_features | extra_edge_column] * U_edge.
NodeStates init_states(ad::Var node_features, ad::Var edge_features,
                       PairList pairs, ad::Var node_embed,
                       const NetworkVars &net,
                       std::optional<ad::Var> extra_node_term = std::nullopt,
                       std::optional<ad::Var> extra_edge_column = std::nullopt);

/// One weight-shared round: m_i = [h_i | sum_j A_ij h_j] W + b, then a GRU
/// update of h_i with input m_i.
NodeStates message_pass_round(const NodeStates &states, const NetworkVars &net);

ad::Var run_mpnn(const NodeStates &initial, const NetworkVars &net,
                 std::size_t rounds);

/// Dropout is applied after each hidden layer of the head only when
/// @p dropout_rng is non-null and @p dropout_rate > 0 (training passes).
struct DropoutSpec {
  double rate = 0.0;
  Rng *rng = nullptr;

  bool active() const { return rng != nullptr && rate > 0.0; }
};

/// Two tanh layers of width d_f, then mean = h W_mu + b_mu and, when the
/// network has a variance head, log-variance = h W_sigma + b_sigma. Without
/// one the log-variance is the constant 0 (unit variance).
GaussianVars gaussian_head(ad::Var h, const NetworkVars &net,
                           const DropoutSpec &dropout = {});

}  // namespace cvgae
