//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "cvgae/io.hpp"

namespace cvgae {
namespace {
  using nlohmann::json;

  constexpr char kMagic[8] = { 'C', 'V', 'G', 'A', 'E', 'C', 'K', 'P' };
  constexpr char kEndMarker[8] = { 'C', 'K', 'P', 'T', '-', 'E', 'N', 'D' };
  // Validation noise is drawn from its own stream so that evaluating does
  // not disturb the training trajectory.
  constexpr std::uint64_t kValidationStream = 0x76616c6964ULL;

  void write_u32(std::ostream &os, std::uint32_t v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
  }
  void write_u64(std::ostream &os, std::uint64_t v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
  }
  std::uint32_t read_u32(std::istream &is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char *>(&v), sizeof v))
      throw CheckpointError("corrupt checkpoint: truncated");
    return v;
  }
  std::uint64_t read_u64(std::istream &is) {
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char *>(&v), sizeof v))
      throw CheckpointError("corrupt checkpoint: truncated");
    return v;
  }

  json mpnn_json(const MpnnConfig &c) {
    return { { "rounds", c.rounds },
             { "hidden", c.hidden },
             { "head_hidden", c.head_hidden } };
  }

  json model_json(const ModelConfig &c) {
    return { { "mpnn", mpnn_json(c.mpnn) },
             { "node_dim", c.node_dim },
             { "edge_dim", c.edge_dim },
             { "init_seed", c.init_seed } };
  }

  ModelConfig model_from_json(const json &j) {
    ModelConfig c;
    c.mpnn.rounds = j.at("mpnn").at("rounds").get<std::size_t>();
    c.mpnn.hidden = j.at("mpnn").at("hidden").get<std::size_t>();
    c.mpnn.head_hidden = j.at("mpnn").at("head_hidden").get<std::size_t>();
    c.node_dim = j.at("node_dim").get<std::size_t>();
    c.edge_dim = j.at("edge_dim").get<std::size_t>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
  }

  // Doubles go through their bit patterns so the round trip is exact.
  json exact(double v) { return std::bit_cast<std::uint64_t>(v); }
  double exact_double(const json &j) {
    return std::bit_cast<double>(j.get<std::uint64_t>());
  }

  json train_json(const TrainConfig &c) {
    json j = { { "learning_rate", exact(c.learning_rate) },
               { "batch_size", c.batch_size },
               { "alpha", exact(c.alpha) },
               { "dropout", exact(c.dropout) },
               { "max_steps", c.max_steps },
               { "seed", c.seed },
               { "checkpoint_interval", c.checkpoint_interval },
               { "clip_norm", nullptr },
               { "early_stopping_patience", c.early_stopping_patience },
               { "validation_interval", c.validation_interval } };
    if (c.clip_norm)
      j["clip_norm"] = exact(*c.clip_norm);
    return j;
  }

  TrainConfig train_from_json(const json &j) {
    TrainConfig c;
    c.learning_rate = exact_double(j.at("learning_rate"));
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.alpha = exact_double(j.at("alpha"));
    c.dropout = exact_double(j.at("dropout"));
    c.max_steps = j.at("max_steps").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.checkpoint_interval = j.at("checkpoint_interval").get<std::size_t>();
    if (!j.at("clip_norm").is_null())
      c.clip_norm = exact_double(j.at("clip_norm"));
    c.early_stopping_patience = j.at("early_stopping_patience").get<std::size_t>();
    c.validation_interval = j.at("validation_interval").get<std::size_t>();
    return c;
  }

  void write_tensors(std::ostream &os, const std::vector<Tensor> &ts) {
    write_u64(os, ts.size());
    for (const auto &t: ts)
      ad::write_tensor(os, t);
  }

  std::vector<Tensor> read_tensors(std::istream &is) {
    const std::uint64_t n = read_u64(is);
    if (n > (1u << 20))
      throw CheckpointError("corrupt checkpoint: implausible tensor count");
    std::vector<Tensor> ts;
    ts.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
      ts.push_back(ad::read_tensor(is));
    return ts;
  }

  void add_into(std::vector<Tensor> &acc, const std::vector<Tensor> &g) {
    for (std::size_t p = 0; p < acc.size(); ++p)
      for (std::size_t i = 0; i < acc[p].size(); ++i)
        acc[p][i] += g[p][i];
  }
}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("train config: learning_rate must be > 0");
  if (batch_size < 1)
    throw std::invalid_argument("train config: batch_size must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("train config: alpha must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw std::invalid_argument("train config: dropout must be in [0, 1)");
  if (clip_norm && !(*clip_norm > 0.0))
    throw std::invalid_argument("train config: clip_norm must be > 0");
  if (early_stopping_patience > 0 && validation_interval == 0)
    throw std::invalid_argument(
        "train config: early stopping needs a validation_interval");
}

AdamState AdamState::for_params(const ad::ParamStore &params) {
  AdamState s;
  for (const auto &t: params.values()) {
    s.m.emplace_back(t.shape(), std::vector<double>(t.size(), 0.0));
    s.v.emplace_back(t.shape(), std::vector<double>(t.size(), 0.0));
  }
  return s;
}

void adam_step(ad::ParamStore &params, const std::vector<Tensor> &grads,
               AdamState &state, double learning_rate) {
  if (grads.size() != params.size() || state.m.size() != params.size()
      || state.v.size() != params.size())
    throw ShapeError("adam_step: gradient/state count does not match parameters");
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!grads[p].same_shape(params.value(p)) || !state.m[p].same_shape(grads[p])
        || !state.v[p].same_shape(grads[p]))
      throw ShapeError("adam_step: shape mismatch for '" + params.name(p) + "'");
    if (!grads[p].all_finite())
      throw ad::NumericError("adam_step: non-finite gradient for '"
                             + params.name(p) + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor &w = params.value(p);
    Tensor &m = state.m[p];
    Tensor &v = state.v[p];
    const Tensor &g = grads[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

double clip_grad_norm(std::vector<Tensor> &grads, double max_norm) {
  double sq = 0.0;
  for (const auto &g: grads)
    for (std::size_t i = 0; i < g.size(); ++i)
      sq += g[i] * g[i];
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double k = max_norm / norm;
    for (auto &g: grads)
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] *= k;
  }
  return norm;
}

void write_loss_csv(std::ostream &os, const std::vector<LossRecord> &trace) {
  os << "step,recon,kl_post_prior,kl_prior_uncond,total\n";
  for (const auto &r: trace)
    os << r.step << ',' << format_double(r.terms.recon) << ','
       << format_double(r.terms.kl_post_prior) << ','
       << format_double(r.terms.kl_prior_uncond) << ','
       << format_double(r.terms.total) << '\n';
}

// ---------------------------------------------------------------------------
// Checkpoint

void save_checkpoint(std::ostream &os, const Checkpoint &ckpt) {
  json meta = { { "model", model_json(ckpt.model) },
                { "train", train_json(ckpt.train) },
                { "step", ckpt.step },
                { "vocab_fingerprint", ckpt.vocab_fingerprint },
                { "rng_state", ckpt.rng_state },
                { "epoch_order", ckpt.epoch_order },
                { "cursor", ckpt.cursor },
                { "best_valid", exact(ckpt.best_valid) },
                { "stale_validations", ckpt.stale_validations },
                { "adam",
                  { { "beta1", exact(ckpt.adam.beta1) },
                    { "beta2", exact(ckpt.adam.beta2) },
                    { "epsilon", exact(ckpt.adam.epsilon) },
                    { "step", ckpt.adam.step } } } };
  const std::string text = meta.dump();
  os.write(kMagic, sizeof kMagic);
  write_u32(os, kCheckpointVersion);
  write_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  ckpt.params.save(os);
  write_tensors(os, ckpt.adam.m);
  write_tensors(os, ckpt.adam.v);
  os.write(kEndMarker, sizeof kEndMarker);
}

Checkpoint load_checkpoint(std::istream &is) {
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw CheckpointError("not a cvgae checkpoint");
  const std::uint32_t version = read_u32(is);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version "
                          + std::to_string(version));
  const std::uint64_t len = read_u64(is);
  if (len > (1u << 30))
    throw CheckpointError("corrupt checkpoint: implausible metadata size");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len)))
    throw CheckpointError("corrupt checkpoint: truncated");

  Checkpoint c;
  try {
    const json meta = json::parse(text);
    c.model = model_from_json(meta.at("model"));
    c.train = train_from_json(meta.at("train"));
    c.step = meta.at("step").get<std::size_t>();
    c.vocab_fingerprint = meta.at("vocab_fingerprint").get<std::uint64_t>();
    c.rng_state = meta.at("rng_state").get<std::string>();
    c.epoch_order = meta.at("epoch_order").get<std::vector<std::size_t>>();
    c.cursor = meta.at("cursor").get<std::size_t>();
    c.best_valid = exact_double(meta.at("best_valid"));
    c.stale_validations = meta.at("stale_validations").get<std::size_t>();
    const json &a = meta.at("adam");
    c.adam.beta1 = exact_double(a.at("beta1"));
    c.adam.beta2 = exact_double(a.at("beta2"));
    c.adam.epsilon = exact_double(a.at("epsilon"));
    c.adam.step = a.at("step").get<std::uint64_t>();
  } catch (const json::exception &e) {
    throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
  }

  try {
    c.params = ad::ParamStore::load(is);
    c.adam.m = read_tensors(is);
    c.adam.v = read_tensors(is);
  } catch (const CheckpointError &) {
    throw;
  } catch (const std::exception &e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
  char end[sizeof kEndMarker];
  if (!is.read(end, sizeof end) || std::memcmp(end, kEndMarker, sizeof end) != 0)
    throw CheckpointError("corrupt checkpoint: truncated");
  if (c.adam.m.size() != c.params.size() || c.adam.v.size() != c.params.size())
    throw CheckpointError("corrupt checkpoint: optimizer state does not match");
  return c;
}

void save_checkpoint_file(const std::string &path, const Checkpoint &ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path + "'");
  save_checkpoint(out, ckpt);
  if (!out)
    throw std::runtime_error("failed writing '" + path + "'");
}

Checkpoint load_checkpoint_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CheckpointError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const Dataset &dataset, ModelConfig model_config,
                 TrainConfig config)
    : dataset_(&dataset), model_(model_config), config_(config),
      rng_(config.seed), best_valid_(std::numeric_limits<double>::infinity()) {
  config_.validate();
  if (dataset.splits.train.empty())
    throw std::invalid_argument("training split is empty");
  if (model_.config().node_dim != dataset.vocab.node_dim())
    throw std::invalid_argument("model node_dim does not match dataset vocab");
  adam_ = AdamState::for_params(model_.params());
}

Trainer::Trainer(const Dataset &dataset, Checkpoint ckpt)
    : dataset_(&dataset), model_(ckpt.model, std::move(ckpt.params)),
      config_(ckpt.train), adam_(std::move(ckpt.adam)),
      rng_(load_rng_state(ckpt.rng_state)), step_(ckpt.step),
      order_(std::move(ckpt.epoch_order)), cursor_(ckpt.cursor),
      best_valid_(ckpt.best_valid), stale_validations_(ckpt.stale_validations) {
  config_.validate();
  if (ckpt.vocab_fingerprint != dataset.vocab.fingerprint())
    throw CheckpointError("checkpoint vocabulary does not match dataset");
  if (dataset.splits.train.empty())
    throw std::invalid_argument("training split is empty");
  for (std::size_t p = 0; p < model_.params().size(); ++p)
    if (!adam_.m[p].same_shape(model_.params().value(p))
        || !adam_.v[p].same_shape(model_.params().value(p)))
      throw CheckpointError("optimizer state shape mismatch for '"
                            + model_.params().name(p) + "'");
  if (cursor_ > order_.size())
    throw CheckpointError("checkpoint epoch cursor out of range");
  for (auto i: order_)
    if (i >= dataset.size())
      throw CheckpointError("checkpoint epoch order references unknown entry");
}

std::vector<std::size_t> Trainer::next_batch() {
  if (cursor_ >= order_.size()) {
    order_ = dataset_->splits.train;
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  const std::size_t end = std::min(order_.size(), cursor_ + config_.batch_size);
  std::vector<std::size_t> batch(order_.begin() + static_cast<long>(cursor_),
                                 order_.begin() + static_cast<long>(end));
  cursor_ = end;
  return batch;
}

std::vector<Tensor> Trainer::batch_gradients(const std::vector<std::size_t> &batch,
                                             Rng &rng, ElboBreakdown *terms) const {
  const auto &params = model_.params();
  std::vector<Tensor> acc;
  acc.reserve(params.size());
  for (const auto &t: params.values())
    acc.emplace_back(t.shape(), std::vector<double>(t.size(), 0.0));
  ElboBreakdown sum;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto idx: batch) {
    const DatasetEntry &e = dataset_->entries.at(idx);
    ad::Tape tape;
    const BoundModel b = bind_model(tape, model_);
    const ElboVars ev = elbo_loss(b, bind_graph(tape, e.features), e.conformation,
                                  config_.alpha, rng, config_.dropout);
    tape.backward(ad::scale(ev.total, -inv));
    add_into(acc, tape.parameter_grads(params));
    const ElboBreakdown v = ev.values();
    sum.recon += v.recon * inv;
    sum.kl_post_prior += v.kl_post_prior * inv;
    sum.kl_prior_uncond += v.kl_prior_uncond * inv;
    sum.total += v.total * inv;
  }
  if (terms)
    *terms = sum;
  return acc;
}

LossRecord Trainer::step() {
  const std::vector<std::size_t> batch = next_batch();
  LossRecord rec;
  std::vector<Tensor> grads = batch_gradients(batch, rng_, &rec.terms);
  if (config_.clip_norm)
    clip_grad_norm(grads, *config_.clip_norm);
  adam_step(model_.params(), grads, adam_, config_.learning_rate);
  rec.step = ++step_;
  return rec;
}

std::vector<LossRecord> Trainer::train_epoch() {
  std::vector<LossRecord> trace;
  if (cursor_ >= order_.size())
    trace.push_back(step());
  while (cursor_ < order_.size())
    trace.push_back(step());
  return trace;
}

std::vector<LossRecord>
Trainer::run(const std::function<void(const Trainer &, const LossRecord &)> &on_step) {
  std::vector<LossRecord> trace;
  stopped_early_ = false;
  while (step_ < config_.max_steps) {
    trace.push_back(step());
    if (on_step)
      on_step(*this, trace.back());
    if (config_.validation_interval > 0 && step_ % config_.validation_interval == 0
        && !dataset_->splits.valid.empty()) {
      const double v = evaluate_loss(dataset_->splits.valid);
      if (v < best_valid_) {
        best_valid_ = v;
        stale_validations_ = 0;
      } else if (config_.early_stopping_patience > 0
                 && ++stale_validations_ >= config_.early_stopping_patience) {
        stopped_early_ = true;
        break;
      }
    }
  }
  return trace;
}

double Trainer::evaluate_loss(const std::vector<std::size_t> &indices) const {
  if (indices.empty())
    throw std::invalid_argument("evaluate_loss: no molecules");
  Rng rng(config_.seed ^ kValidationStream);
  double total = 0.0;
  for (auto idx: indices) {
    const DatasetEntry &e = dataset_->entries.at(idx);
    total -= elbo_values(model_, e.features, e.conformation, config_.alpha, rng)
                 .total;
  }
  return total / static_cast<double>(indices.size());
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.model = model_.config();
  c.train = config_;
  c.params = model_.params();
  c.adam = adam_;
  c.step = step_;
  c.vocab_fingerprint = dataset_->vocab.fingerprint();
  c.rng_state = save_rng_state(rng_);
  c.epoch_order = order_;
  c.cursor = cursor_;
  c.best_valid = best_valid_;
  c.stale_validations = stale_validations_;
  return c;
}

}  // namespace cvgae
