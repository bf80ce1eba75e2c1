//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvgae/autodiff.hpp"
#include "cvgae/cvgae.hpp"
#include "cvgae/dataset.hpp"
#include "cvgae/random.hpp"

namespace cvgae {

struct TrainConfig {
  double learning_rate = 3e-4;
  std::size_t batch_size = 20;
  double alpha = 1e-5;
  double dropout = 0.2;
  std::size_t max_steps = 1000;
  std::uint64_t seed = 0;
  std::size_t checkpoint_interval = 0;  // 0: only at the end

  // Off unless set.
  std::optional<double> clip_norm;
  std::size_t early_stopping_patience = 0;  // validations without improvement
  std::size_t validation_interval = 0;      // steps between validations

  void validate() const;
  friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState for_params(const ad::ParamStore &params);
  friend bool operator==(const AdamState &, const AdamState &) = default;
};

/// Bias-corrected Adam. Throws NumericError naming the first parameter
/// with a non-finite gradient; nothing is modified in that case.
void adam_step(ad::ParamStore &params, const std::vector<Tensor> &grads,
               AdamState &state, double learning_rate);

/// Scales @p grads in place so that their joint L2 norm is at most
/// @p max_norm. Returns the norm before scaling.
double clip_grad_norm(std::vector<Tensor> &grads, double max_norm);

/// Batch means of the objective terms; loss = -total.
struct LossRecord {
  std::size_t step = 0;
  ElboBreakdown terms;
  double loss() const { return -terms.total; }
};

void write_loss_csv(std::ostream &os, const std::vector<LossRecord> &trace);

class CheckpointError: public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  ad::ParamStore params;
  AdamState adam;
  std::size_t step = 0;
  std::uint64_t vocab_fingerprint = 0;
  std::string rng_state;
  std::vector<std::size_t> epoch_order;
  std::size_t cursor = 0;
  double best_valid = 0.0;
  std::size_t stale_validations = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream &os, const Checkpoint &ckpt);
Checkpoint load_checkpoint(std::istream &is);
void save_checkpoint_file(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint_file(const std::string &path);

/// Minibatch trainer over the dataset's training split. Batches are taken
/// sequentially from a per-epoch shuffle of the split; all randomness
/// (shuffles, posterior noise, dropout) comes from one engine seeded by
/// TrainConfig::seed, so a checkpoint captures the full trajectory state.
class Trainer {
public:
  Trainer(const Dataset &dataset, ModelConfig model_config, TrainConfig config);
  Trainer(const Dataset &dataset, Checkpoint checkpoint);

  LossRecord step();
  std::vector<LossRecord> train_epoch();

  /// Steps until max_steps or early stopping. @p on_step runs after every
  /// step (checkpointing, logging).
  std::vector<LossRecord>
  run(const std::function<void(const Trainer &, const LossRecord &)> &on_step = {});

  /// Mean negative objective over @p indices with dropout disabled and a
  /// fixed noise stream, so repeated calls agree exactly.
  double evaluate_loss(const std::vector<std::size_t> &indices) const;

  /// Batch gradients without updating anything; exposed for tests.
  std::vector<Tensor> batch_gradients(const std::vector<std::size_t> &batch,
                                      Rng &rng, ElboBreakdown *terms = nullptr) const;

  Checkpoint checkpoint() const;

  const Model &model() const { return model_; }
  Model &model() { return model_; }
  const TrainConfig &config() const { return config_; }
  const AdamState &adam() const { return adam_; }
  std::size_t steps_taken() const { return step_; }
  bool stopped_early() const { return stopped_early_; }

private:
  std::vector<std::size_t> next_batch();

  const Dataset *dataset_;
  Model model_;
  TrainConfig config_;
  AdamState adam_;
  Rng rng_;
  std::size_t step_ = 0;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  double best_valid_ = 0.0;
  std::size_t stale_validations_ = 0;
  bool stopped_early_ = false;
};

}  // namespace cvgae
