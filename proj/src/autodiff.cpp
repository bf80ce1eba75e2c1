//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include <Eigen/Core>

namespace cvgae::ad {
namespace {
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ConstMap = Eigen::Map<const RowMat>;
  using MutMap = Eigen::Map<RowMat>;

  ConstMap as_matrix(const Tensor &t) {
    return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                    static_cast<Eigen::Index>(t.cols()));
  }

  MutMap as_matrix(Tensor &t) {
    return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
  }

  Tape &tape_of(Var a, Var b) {
    if (a.tape == nullptr || a.tape != b.tape)
      throw std::invalid_argument("operands belong to different tapes");
    return *a.tape;
  }

  Tape &tape_of(Var a) {
    if (a.tape == nullptr)
      throw std::invalid_argument("operand is not bound to a tape");
    return *a.tape;
  }

  void require_same_shape(const char *op, const Tensor &a, const Tensor &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string()
                       + " vs " + b.shape_string());
  }

  template <class F>
  Tensor map_values(const Tensor &a, F f) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i)
      out[i] = f(a[i]);
    return out;
  }

  // Elementwise unary op whose derivative is expressed through the input x
  // and output y.
  template <class Fwd, class Deriv>
  Var unary(const char *op, Var a, Fwd fwd, Deriv deriv) {
    Tape &tape = tape_of(a);
    Tensor y = map_values(a.value(), fwd);
    const std::size_t ia = a.id;
    return tape.record(op, std::move(y), { ia },
                       [ia, deriv](Tape &t, const Tensor &g) {
                         const Tensor &x = t.value(ia);
                         Tensor gin(x.rows(), x.cols());
                         for (std::size_t i = 0; i < x.size(); ++i)
                           gin[i] = g[i] * deriv(x[i]);
                         t.accumulate(ia, gin);
                       });
  }

  // Elementwise unary op whose derivative is a function of its output y.
  template <class Fwd, class Deriv>
  Var unary_out(const char *op, Var a, Fwd fwd, Deriv deriv) {
    Tape &tape = tape_of(a);
    Tensor y = map_values(a.value(), fwd);
    const std::size_t ia = a.id;
    const std::size_t io = tape.size();
    return tape.record(op, std::move(y), { ia },
                       [ia, io, deriv](Tape &t, const Tensor &g) {
                         const Tensor &y = t.value(io);
                         Tensor gin(y.rows(), y.cols());
                         for (std::size_t i = 0; i < y.size(); ++i)
                           gin[i] = g[i] * deriv(y[i]);
                         t.accumulate(ia, gin);
                       });
  }

  void write_u64(std::ostream &os, std::uint64_t v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
  }

  std::uint64_t read_u64(std::istream &is) {
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char *>(&v), sizeof v))
      throw std::runtime_error("truncated parameter stream");
    return v;
  }

  constexpr char kStoreMagic[8] = { 'C', 'V', 'G', 'A', 'E', 'P', 'R', 'M' };
  constexpr std::uint64_t kStoreVersion = 1;
  constexpr std::uint64_t kMaxReasonable = std::uint64_t { 1 } << 32;
}  // namespace

const Tensor &Var::value() const {
  return tape->value(id);
}

// ---------------------------------------------------------------------------
// ParamStore

std::size_t ParamStore::add(std::string name, Tensor init) {
  if (lookup_.contains(name))
    throw std::invalid_argument("duplicate parameter name: " + name);
  const std::size_t idx = values_.size();
  lookup_.emplace(name, idx);
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return idx;
}

std::size_t ParamStore::index(std::string_view name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end())
    throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

bool ParamStore::contains(std::string_view name) const {
  return lookup_.find(name) != lookup_.end();
}

std::size_t ParamStore::total_entries() const {
  std::size_t n = 0;
  for (const auto &v: values_)
    n += v.size();
  return n;
}

void write_tensor(std::ostream &os, const Tensor &t) {
  write_u64(os, t.rank());
  for (auto d: t.shape())
    write_u64(os, d);
  os.write(reinterpret_cast<const char *>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream &is) {
  const std::uint64_t rank = read_u64(is);
  if (rank > 8)
    throw std::runtime_error("corrupt tensor header");
  std::vector<std::size_t> shape(rank);
  std::size_t count = 1;
  for (auto &d: shape) {
    d = read_u64(is);
    if (d > kMaxReasonable)
      throw std::runtime_error("corrupt tensor header");
    count *= d;
  }
  if (count > kMaxReasonable)
    throw std::runtime_error("corrupt tensor header");
  std::vector<double> values(count);
  if (!is.read(reinterpret_cast<char *>(values.data()),
               static_cast<std::streamsize>(count * sizeof(double))))
    throw std::runtime_error("truncated tensor data");
  return Tensor(std::move(shape), std::move(values));
}

void ParamStore::save(std::ostream &os) const {
  os.write(kStoreMagic, sizeof kStoreMagic);
  write_u64(os, kStoreVersion);
  write_u64(os, values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    write_u64(os, names_[i].size());
    os.write(names_[i].data(), static_cast<std::streamsize>(names_[i].size()));
    write_tensor(os, values_[i]);
  }
}

ParamStore ParamStore::load(std::istream &is) {
  char magic[sizeof kStoreMagic];
  if (!is.read(magic, sizeof magic)
      || std::memcmp(magic, kStoreMagic, sizeof magic) != 0)
    throw std::runtime_error("not a parameter store");
  if (read_u64(is) != kStoreVersion)
    throw std::runtime_error("unsupported parameter store version");
  const std::uint64_t n = read_u64(is);
  if (n > kMaxReasonable)
    throw std::runtime_error("corrupt parameter store");
  ParamStore store;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t len = read_u64(is);
    if (len > 4096)
      throw std::runtime_error("corrupt parameter name");
    std::string name(len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(len)))
      throw std::runtime_error("truncated parameter name");
    store.add(std::move(name), read_tensor(is));
  }
  return store;
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(Tensor value) {
  if (!value.all_finite())
    throw NumericError("constant: non-finite value");
  nodes_.push_back(Node { std::move(value), {}, {}, false, {}, false });
  return Var { this, nodes_.size() - 1 };
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite())
    throw NumericError("variable: non-finite value");
  nodes_.push_back(Node { std::move(value), {}, {}, true, {}, false });
  return Var { this, nodes_.size() - 1 };
}

Var Tape::parameter(const ParamStore &store, std::size_t index) {
  Var v = variable(store.value(index));
  params_.push_back(ParamLeaf { &store, index, v.id });
  return v;
}

Var Tape::record(std::string_view op, Tensor value,
                 std::vector<std::size_t> inputs, Pullback pullback) {
  if (!value.all_finite())
    throw NumericError(std::string(op) + ": non-finite output");
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [&](auto i) {
    return nodes_[i].requires_grad;
  });
  Node node { std::move(value), {}, {}, needs, {}, false };
  if (needs) {
    node.inputs = std::move(inputs);
    node.pullback = std::move(pullback);
  }
  nodes_.push_back(std::move(node));
  return Var { this, nodes_.size() - 1 };
}

void Tape::accumulate(std::size_t id, const Tensor &g) {
  Node &n = nodes_[id];
  if (!n.requires_grad)
    return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i)
    n.grad[i] += g[i];
}

void Tape::backward(Var loss) {
  if (loss.tape != this)
    throw std::invalid_argument("backward: loss is not on this tape");
  if (value(loss.id).size() != 1)
    throw ShapeError("backward: loss must be scalar, got "
                     + value(loss.id).shape_string());
  for (auto &n: nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  accumulate(loss.id, Tensor::scalar(1.0));
  for (std::size_t k = loss.id + 1; k-- > 0;) {
    Node &n = nodes_[k];
    if (!n.has_grad || !n.pullback)
      continue;
    n.pullback(*this, n.grad);
  }
}

Tensor Tape::grad(Var v) const {
  const Node &n = nodes_[v.id];
  if (n.has_grad)
    return n.grad;
  return Tensor(n.value.rows(), n.value.cols());
}

std::vector<Tensor> Tape::parameter_grads(const ParamStore &store) const {
  std::vector<Tensor> out;
  out.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Tensor &v = store.value(i);
    out.emplace_back(std::vector<std::size_t>(v.shape()),
                     std::vector<double>(v.size(), 0.0));
  }
  for (const auto &leaf: params_) {
    if (leaf.store != &store)
      continue;
    const Node &n = nodes_[leaf.node];
    if (!n.has_grad)
      continue;
    Tensor &dst = out[leaf.index];
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] += n.grad[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Primitives

Var matmul(Var a, Var b) {
  Tape &tape = tape_of(a, b);
  const Tensor &av = a.value();
  const Tensor &bv = b.value();
  if (av.cols() != bv.rows())
    throw ShapeError("matmul: inner dimensions differ " + av.shape_string()
                     + " x " + bv.shape_string());
  Tensor out(av.rows(), bv.cols());
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
  const std::size_t ia = a.id, ib = b.id;
  return tape.record("matmul", std::move(out), { ia, ib },
                     [ia, ib](Tape &t, const Tensor &g) {
                       const Tensor &av = t.value(ia);
                       const Tensor &bv = t.value(ib);
                       if (t.requires_grad(ia)) {
                         Tensor ga(av.rows(), av.cols());
                         as_matrix(ga).noalias() =
                             as_matrix(g) * as_matrix(bv).transpose();
                         t.accumulate(ia, ga);
                       }
                       if (t.requires_grad(ib)) {
                         Tensor gb(bv.rows(), bv.cols());
                         as_matrix(gb).noalias() =
                             as_matrix(av).transpose() * as_matrix(g);
                         t.accumulate(ib, gb);
                       }
                     });
}

Var add(Var a, Var b) {
  Tape &tape = tape_of(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += b.value()[i];
  const std::size_t ia = a.id, ib = b.id;
  return tape.record("add", std::move(out), { ia, ib },
                     [ia, ib](Tape &t, const Tensor &g) {
                       t.accumulate(ia, g);
                       t.accumulate(ib, g);
                     });
}

Var sub(Var a, Var b) {
  Tape &tape = tape_of(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] -= b.value()[i];
  const std::size_t ia = a.id, ib = b.id;
  return tape.record("sub", std::move(out), { ia, ib },
                     [ia, ib](Tape &t, const Tensor &g) {
                       t.accumulate(ia, g);
                       if (t.requires_grad(ib))
                         t.accumulate(ib, map_values(g, [](double x) {
                                        return -x;
                                      }));
                     });
}

Var mul(Var a, Var b) {
  Tape &tape = tape_of(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= b.value()[i];
  const std::size_t ia = a.id, ib = b.id;
  return tape.record("mul", std::move(out), { ia, ib },
                     [ia, ib](Tape &t, const Tensor &g) {
                       const Tensor &av = t.value(ia);
                       const Tensor &bv = t.value(ib);
                       if (t.requires_grad(ia)) {
                         Tensor ga = g;
                         for (std::size_t i = 0; i < ga.size(); ++i)
                           ga[i] *= bv[i];
                         t.accumulate(ia, ga);
                       }
                       if (t.requires_grad(ib)) {
                         Tensor gb = g;
                         for (std::size_t i = 0; i < gb.size(); ++i)
                           gb[i] *= av[i];
                         t.accumulate(ib, gb);
                       }
                     });
}

Var scale(Var a, double k) {
  Tape &tape = tape_of(a);
  Tensor out = map_values(a.value(), [k](double x) { return k * x; });
  const std::size_t ia = a.id;
  return tape.record("scale", std::move(out), { ia },
                     [ia, k](Tape &t, const Tensor &g) {
                       t.accumulate(ia, map_values(g, [k](double x) {
                                      return k * x;
                                    }));
                     });
}

Var add_scalar(Var a, double k) {
  Tape &tape = tape_of(a);
  Tensor out = map_values(a.value(), [k](double x) { return x + k; });
  const std::size_t ia = a.id;
  return tape.record("add_scalar", std::move(out), { ia },
                     [ia](Tape &t, const Tensor &g) { t.accumulate(ia, g); });
}

Var add_bias(Var a, Var bias) {
  Tape &tape = tape_of(a, bias);
  const Tensor &av = a.value();
  const Tensor &bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols())
    throw ShapeError("add_bias: bias " + bv.shape_string()
                     + " does not broadcast over " + av.shape_string());
  Tensor out = av;
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c)
      out(r, c) += bv[c];
  const std::size_t ia = a.id, ib = bias.id;
  return tape.record("add_bias", std::move(out), { ia, ib },
                     [ia, ib](Tape &t, const Tensor &g) {
                       t.accumulate(ia, g);
                       if (t.requires_grad(ib)) {
                         Tensor gb(1, g.cols());
                         for (std::size_t r = 0; r < g.rows(); ++r)
                           for (std::size_t c = 0; c < g.cols(); ++c)
                             gb[c] += g(r, c);
                         t.accumulate(ib, gb);
                       }
                     });
}

Var sigmoid(Var a) {
  return unary_out(
      "sigmoid", a,
      [](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary_out(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary_out(
      "exp", a, [](double x) { return std::exp(x); },
      [](double y) { return y; });
}

Var log(Var a) {
  return unary(
      "log", a, [](double x) { return std::log(x); },
      [](double x) { return 1.0 / x; });
}

Var sqrt(Var a) {
  return unary_out(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double y) { return 0.5 / y; });
}

Var square(Var a) {
  return unary(
      "square", a, [](double x) { return x * x; },
      [](double x) { return 2.0 * x; });
}

Var sum(Var a) {
  Tape &tape = tape_of(a);
  double s = 0.0;
  for (double v: a.value().values())
    s += v;
  const std::size_t ia = a.id;
  return tape.record("sum", Tensor::scalar(s), { ia },
                     [ia](Tape &t, const Tensor &g) {
                       const Tensor &x = t.value(ia);
                       t.accumulate(ia, Tensor(x.rows(), x.cols(), g[0]));
                     });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0)
    throw ShapeError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var concat_cols(Var a, Var b) {
  Tape &tape = tape_of(a, b);
  const Tensor &av = a.value();
  const Tensor &bv = b.value();
  if (av.rows() != bv.rows())
    throw ShapeError("concat_cols: row counts differ " + av.shape_string()
                     + " vs " + bv.shape_string());
  const std::size_t ca = av.cols(), cb = bv.cols();
  Tensor out(av.rows(), ca + cb);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < ca; ++c)
      out(r, c) = av(r, c);
    for (std::size_t c = 0; c < cb; ++c)
      out(r, ca + c) = bv(r, c);
  }
  const std::size_t ia = a.id, ib = b.id;
  return tape.record("concat_cols", std::move(out), { ia, ib },
                     [ia, ib, ca, cb](Tape &t, const Tensor &g) {
                       Tensor ga(g.rows(), ca), gb(g.rows(), cb);
                       for (std::size_t r = 0; r < g.rows(); ++r) {
                         for (std::size_t c = 0; c < ca; ++c)
                           ga(r, c) = g(r, c);
                         for (std::size_t c = 0; c < cb; ++c)
                           gb(r, c) = g(r, ca + c);
                       }
                       t.accumulate(ia, ga);
                       t.accumulate(ib, gb);
                     });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  Tape &tape = tape_of(a);
  const Tensor &av = a.value();
  if (begin > end || end > av.cols())
    throw ShapeError("slice_cols: range out of bounds for "
                     + av.shape_string());
  Tensor out(av.rows(), end - begin);
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = begin; c < end; ++c)
      out(r, c - begin) = av(r, c);
  const std::size_t ia = a.id;
  return tape.record("slice_cols", std::move(out), { ia },
                     [ia, begin, end](Tape &t, const Tensor &g) {
                       const Tensor &x = t.value(ia);
                       Tensor gin(x.rows(), x.cols());
                       for (std::size_t r = 0; r < x.rows(); ++r)
                         for (std::size_t c = begin; c < end; ++c)
                           gin(r, c) = g(r, c - begin);
                       t.accumulate(ia, gin);
                     });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  Tape &tape = tape_of(a);
  const Tensor &av = a.value();
  if (begin > end || end > av.rows())
    throw ShapeError("slice_rows: range out of bounds for "
                     + av.shape_string());
  const std::size_t c = av.cols();
  Tensor out(end - begin, c);
  std::copy(av.data() + begin * c, av.data() + end * c, out.data());
  const std::size_t ia = a.id;
  return tape.record("slice_rows", std::move(out), { ia },
                     [ia, begin, c](Tape &t, const Tensor &g) {
                       const Tensor &x = t.value(ia);
                       Tensor gin(x.rows(), x.cols());
                       std::copy(g.data(), g.data() + g.size(),
                                 gin.data() + begin * c);
                       t.accumulate(ia, gin);
                     });
}

Var edge_aggregate(Var edges, Var nodes,
                   std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  Tape &tape = tape_of(edges, nodes);
  const Tensor &ev = edges.value();
  const Tensor &hv = nodes.value();
  const std::size_t m = hv.rows();
  const std::size_t d = hv.cols();
  if (ev.rows() != pairs.size() || ev.cols() != d * d)
    throw ShapeError("edge_aggregate: edge tensor " + ev.shape_string()
                     + " incompatible with " + std::to_string(pairs.size())
                     + " pairs of width " + std::to_string(d));
  for (const auto &[i, j]: pairs)
    if (i >= m || j >= m || i == j)
      throw ShapeError("edge_aggregate: invalid pair");

  Tensor out(m, d);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    ConstMap a(ev.data() + p * d * d, static_cast<Eigen::Index>(d),
               static_cast<Eigen::Index>(d));
    Eigen::Map<const Eigen::VectorXd> hi(hv.data() + i * d,
                                         static_cast<Eigen::Index>(d));
    Eigen::Map<const Eigen::VectorXd> hj(hv.data() + j * d,
                                         static_cast<Eigen::Index>(d));
    Eigen::Map<Eigen::VectorXd> oi(out.data() + i * d,
                                   static_cast<Eigen::Index>(d));
    Eigen::Map<Eigen::VectorXd> oj(out.data() + j * d,
                                   static_cast<Eigen::Index>(d));
    oi.noalias() += a * hj;
    oj.noalias() += a * hi;
  }

  std::vector<std::pair<std::size_t, std::size_t>> pair_copy(pairs.begin(),
                                                            pairs.end());
  const std::size_t ie = edges.id, ih = nodes.id;
  return tape.record(
      "edge_aggregate", std::move(out), { ie, ih },
      [ie, ih, d, pair_copy = std::move(pair_copy)](Tape &t, const Tensor &g) {
        const Tensor &ev = t.value(ie);
        const Tensor &hv = t.value(ih);
        const auto di = static_cast<Eigen::Index>(d);
        const bool want_e = t.requires_grad(ie);
        const bool want_h = t.requires_grad(ih);
        Tensor ge = want_e ? Tensor(ev.rows(), ev.cols()) : Tensor();
        Tensor gh = want_h ? Tensor(hv.rows(), hv.cols()) : Tensor();
        for (std::size_t p = 0; p < pair_copy.size(); ++p) {
          const auto [i, j] = pair_copy[p];
          Eigen::Map<const Eigen::VectorXd> hi(hv.data() + i * d, di);
          Eigen::Map<const Eigen::VectorXd> hj(hv.data() + j * d, di);
          Eigen::Map<const Eigen::VectorXd> gi(g.data() + i * d, di);
          Eigen::Map<const Eigen::VectorXd> gj(g.data() + j * d, di);
          if (want_e) {
            MutMap ga(ge.data() + p * d * d, di, di);
            ga.noalias() += gi * hj.transpose();
            ga.noalias() += gj * hi.transpose();
          }
          if (want_h) {
            ConstMap a(ev.data() + p * d * d, di, di);
            Eigen::Map<Eigen::VectorXd> ghi(gh.data() + i * d, di);
            Eigen::Map<Eigen::VectorXd> ghj(gh.data() + j * d, di);
            ghj.noalias() += a.transpose() * gi;
            ghi.noalias() += a.transpose() * gj;
          }
        }
        if (want_e)
          t.accumulate(ie, ge);
        if (want_h)
          t.accumulate(ih, gh);
      });
}

Var reparam_sample(Var mean, Var variance, const Tensor &noise) {
  require_same_shape("reparam_sample", mean.value(), variance.value());
  require_same_shape("reparam_sample", mean.value(), noise);
  for (double v: variance.value().values())
    if (!(v > 0.0))
      throw std::invalid_argument("reparam_sample: variance must be positive");
  Tape &tape = tape_of(mean, variance);
  return add(mean, mul(sqrt(variance), tape.constant(noise)));
}

Var reparam_sample_logvar(Var mean, Var log_variance, const Tensor &noise) {
  require_same_shape("reparam_sample", mean.value(), log_variance.value());
  require_same_shape("reparam_sample", mean.value(), noise);
  Tape &tape = tape_of(mean, log_variance);
  return add(mean, mul(exp(scale(log_variance, 0.5)), tape.constant(noise)));
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckReport grad_check(
    const ModelFn &model_fn, ParamStore &params, double h,
    const std::function<void(std::vector<Tensor> &)> &analytic_hook) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    Var loss = model_fn(tape, params);
    tape.backward(loss);
    analytic = tape.parameter_grads(params);
  }
  if (analytic_hook)
    analytic_hook(analytic);

  auto eval = [&]() {
    Tape tape;
    return model_fn(tape, params).value().item();
  };

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor &w = params.value(p);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double saved = w[k];
      w[k] = saved + h;
      const double up = eval();
      w[k] = saved - h;
      const double down = eval();
      w[k] = saved;

      const double numeric = (up - down) / (2.0 * h);
      const double exact = analytic[p][k];
      const double denom =
          std::max({ 1.0, std::abs(exact), std::abs(numeric) });
      const double err = std::abs(exact - numeric) / denom;
      ++report.entries_checked;
      if (err > report.max_rel_error || report.entries_checked == 1) {
        report.max_rel_error = err;
        report.worst_param = params.name(p);
        report.worst_entry = k;
        report.worst_analytic = exact;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace cvgae::ad
