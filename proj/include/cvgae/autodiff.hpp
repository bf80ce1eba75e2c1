//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvgae/tensor.hpp"

namespace cvgae::ad {

class NumericError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class Tape;

/// Handle to a node recorded on a tape.
struct Var {
  Tape *tape = nullptr;
  std::size_t id = 0;

  /// Valid until the next node is recorded on the tape.
  const Tensor &value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Named, ordered collection of learnable tensors.
class ParamStore {
public:
  std::size_t add(std::string name, Tensor init);

  std::size_t size() const { return values_.size(); }
  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;

  const std::string &name(std::size_t i) const { return names_[i]; }
  Tensor &value(std::size_t i) { return values_[i]; }
  const Tensor &value(std::size_t i) const { return values_[i]; }
  std::span<const Tensor> values() const { return values_; }

  std::size_t total_entries() const;

  /// Versioned binary layout: name, shape, raw values. Round-trips bit-exactly.
  void save(std::ostream &os) const;
  static ParamStore load(std::istream &is);

  friend bool operator==(const ParamStore &a, const ParamStore &b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, std::size_t, std::less<>> lookup_;
};

void write_tensor(std::ostream &os, const Tensor &t);
Tensor read_tensor(std::istream &is);

/// Wengert list for one forward evaluation.
///
/// Nodes are appended in evaluation order, so the record is topologically
/// sorted by construction and backward() is a single reverse sweep. A tape is
/// not thread-safe; use one tape per thread.
class Tape {
public:
  using Pullback = std::function<void(Tape &, const Tensor &grad_out)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  Var parameter(const ParamStore &store, std::size_t index);

  Var record(std::string_view op, Tensor value, std::vector<std::size_t> inputs,
             Pullback pullback);

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape once. Gradients from any
  /// previous sweep are discarded first.
  void backward(Var loss);

  const Tensor &value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient of the last backward() target with respect to a node. Nodes
  /// off every path to the target report zeros.
  Tensor grad(Var v) const;

  /// Gradients for every entry of @p store in store order.
  std::vector<Tensor> parameter_grads(const ParamStore &store) const;

  void accumulate(std::size_t id, const Tensor &g);

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    Pullback pullback;
    bool requires_grad = false;
    Tensor grad;
    bool has_grad = false;
  };

  std::vector<Node> nodes_;
  struct ParamLeaf {
    const ParamStore *store;
    std::size_t index;
    std::size_t node;
  };
  std::vector<ParamLeaf> params_;
};

// Forward primitives. Each checks shapes, rejects non-finite outputs and
// records its pullback.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double k);
Var add_scalar(Var a, double k);
/// Adds a 1xn row to every row of an mxn matrix.
Var add_bias(Var a, Var bias);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var slice_rows(Var a, std::size_t begin, std::size_t end);

/// Edge-conditioned neighbour sum over a complete graph.
///
/// @p edges holds one flattened d x d matrix per unordered pair (row p for
/// pairs[p]); @p nodes is M x d. Row i of the result is
/// sum over j != i of edges(pair(i,j)) * nodes(j).
Var edge_aggregate(Var edges, Var nodes,
                   std::span<const std::pair<std::size_t, std::size_t>> pairs);

/// mean + sqrt(variance) * noise; noise is a constant.
Var reparam_sample(Var mean, Var variance, const Tensor &noise);

/// mean + exp(0.5 * log_variance) * noise; same sample as reparam_sample with
/// variance = exp(log_variance), without a sqrt of a possibly tiny value.
Var reparam_sample_logvar(Var mean, Var log_variance, const Tensor &noise);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_entry = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

using ModelFn = std::function<Var(Tape &, const ParamStore &)>;

/// Compares reverse-mode gradients of @p model_fn against central differences
/// with step @p h, entry by entry. The relative error of an entry is
/// |g_ad - g_fd| / max(1, |g_ad|, |g_fd|).
///
/// @p analytic_hook, when set, may edit the analytic gradients before the
/// comparison (used to verify that the checker detects faults).
GradCheckReport grad_check(
    const ModelFn &model_fn, ParamStore &params, double h,
    const std::function<void(std::vector<Tensor> &)> &analytic_hook = {});

}  // namespace cvgae::ad
