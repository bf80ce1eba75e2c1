//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "cvgae/autodiff.hpp"
#include "cvgae/random.hpp"

using namespace cvgae;
using ad::Var;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, Rng &rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = lo + (hi - lo) * uniform01(rng);
  return t;
}

// Weighted sum of an op's output so every output entry matters.
Var weighted_sum(Var x, const Tensor &w) {
  return ad::sum(ad::mul(x, x.tape->constant(w)));
}

}  // namespace

TEST(Tensor, ShapeMustMatchValueCount) {
  EXPECT_THROW(Tensor({ 2, 3 }, std::vector<double>(5)), ShapeError);
  const Tensor t({ 2, 3 }, { 1, 2, 3, 4, 5, 6 });
  EXPECT_EQ(t(1, 2), 6.0);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Autodiff, SigmoidAtZero) {
  ad::Tape tape;
  EXPECT_EQ(ad::sigmoid(tape.constant(Tensor::scalar(0.0))).value().item(), 0.5);
}

TEST(Autodiff, IdentityMatmul) {
  Rng rng(1);
  const Tensor a = random_tensor(3, 4, rng);
  ad::Tape tape;
  const Tensor eye = Tensor::from_rows({ { 1, 0, 0 }, { 0, 1, 0 }, { 0, 0, 1 } });
  EXPECT_EQ(ad::matmul(tape.constant(eye), tape.constant(a)).value(), a);
}

TEST(Autodiff, ExpOfLogIsIdentity) {
  Rng rng(2);
  const Tensor x = random_tensor(2, 5, rng, 0.01, 20.0);
  ad::Tape tape;
  const Tensor y = ad::exp(ad::log(tape.constant(x))).value();
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(y[i], x[i], 1e-12 * std::abs(x[i]));
}

TEST(Autodiff, SquareDerivative) {
  ad::Tape tape;
  const Var x = tape.variable(Tensor::scalar(3.0));
  tape.backward(ad::square(x));
  EXPECT_EQ(tape.grad(x).item(), 6.0);
}

TEST(Autodiff, SumOfMatmulGradientIsOuterProduct) {
  Rng rng(3);
  const Tensor w = random_tensor(3, 4, rng);
  const Tensor v = random_tensor(4, 1, rng);
  ad::Tape tape;
  const Var wv = tape.variable(w);
  tape.backward(ad::sum(ad::matmul(wv, tape.constant(v))));
  const Tensor g = tape.grad(wv);
  // dW[i][k] = v[k]; cross-checked against central differences.
  const double h = 1e-5;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(g(i, k), v[k], 1e-14);
      auto f = [&](double delta) {
        Tensor wp = w;
        wp(i, k) += delta;
        ad::Tape t2;
        return ad::sum(ad::matmul(t2.constant(wp), t2.constant(v))).value().item();
      };
      EXPECT_NEAR(g(i, k), (f(h) - f(-h)) / (2 * h), 1e-8);
    }
}

TEST(Autodiff, DisconnectedLeafHasZeroGradient) {
  ad::Tape tape;
  const Var a = tape.variable(Tensor(2, 2, 1.5));
  const Var b = tape.variable(Tensor(2, 2, 2.0));
  tape.backward(ad::sum(ad::square(a)));
  const Tensor gb = tape.grad(b);
  for (std::size_t i = 0; i < gb.size(); ++i)
    EXPECT_EQ(gb[i], 0.0);
}

TEST(Autodiff, NonScalarLossRejected) {
  ad::Tape tape;
  const Var a = tape.variable(Tensor(2, 2, 1.0));
  EXPECT_THROW(tape.backward(a), ShapeError);
}

TEST(Autodiff, ShapeMismatchRejected) {
  ad::Tape tape;
  EXPECT_THROW(ad::add(tape.constant(Tensor(2, 3)), tape.constant(Tensor(3, 2))),
               ShapeError);
  EXPECT_THROW(ad::matmul(tape.constant(Tensor(2, 3)), tape.constant(Tensor(2, 3))),
               ShapeError);
}

TEST(Autodiff, NonFiniteOutputNamesTheOp) {
  ad::Tape tape;
  try {
    ad::log(tape.constant(Tensor(1, 2, 0.0)));
    FAIL() << "expected NumericError";
  } catch (const ad::NumericError &e) {
    EXPECT_NE(std::string(e.what()).find("log"), std::string::npos);
  }
}

TEST(Reparam, ZeroNoiseReturnsMean) {
  Rng rng(4);
  const Tensor mu = random_tensor(2, 3, rng);
  const Tensor var = random_tensor(2, 3, rng, 0.1, 2.0);
  ad::Tape tape;
  EXPECT_EQ(ad::reparam_sample(tape.constant(mu), tape.constant(var), Tensor(2, 3))
                .value(),
            mu);
}

TEST(Reparam, UnitVarianceAddsNoise) {
  Rng rng(5);
  const Tensor mu = random_tensor(2, 3, rng);
  const Tensor n = random_tensor(2, 3, rng);
  ad::Tape tape;
  const Tensor y =
      ad::reparam_sample(tape.constant(mu), tape.constant(Tensor(2, 3, 1.0)), n).value();
  for (std::size_t i = 0; i < y.size(); ++i)
    EXPECT_EQ(y[i], mu[i] + n[i]);
}

TEST(Reparam, NonPositiveVarianceRejected) {
  ad::Tape tape;
  Tensor var(1, 2, 1.0);
  var[1] = 0.0;
  EXPECT_THROW(ad::reparam_sample(tape.constant(Tensor(1, 2)), tape.constant(var),
                                  Tensor(1, 2)),
               std::invalid_argument);
}

TEST(Reparam, VarianceGradientMatchesClosedFormAndDifferences) {
  Rng rng(6);
  const Tensor mu = random_tensor(2, 3, rng);
  const Tensor var = random_tensor(2, 3, rng, 0.2, 3.0);
  const Tensor noise = random_tensor(2, 3, rng, -2.0, 2.0);
  ad::Tape tape;
  const Var v = tape.variable(var);
  tape.backward(ad::sum(ad::reparam_sample(tape.constant(mu), v, noise)));
  const Tensor g = tape.grad(v);
  const double h = 1e-6;
  for (std::size_t i = 0; i < var.size(); ++i) {
    EXPECT_NEAR(g[i], noise[i] / (2.0 * std::sqrt(var[i])), 1e-12);
    const double up = mu[i] + std::sqrt(var[i] + h) * noise[i];
    const double down = mu[i] + std::sqrt(var[i] - h) * noise[i];
    EXPECT_NEAR(g[i], (up - down) / (2 * h), 1e-7);
  }
}

TEST(GradCheck, QuadraticModelIsExact) {
  ad::ParamStore store;
  Rng rng(7);
  store.add("w", random_tensor(3, 3, rng));
  const ad::ModelFn fn = [](ad::Tape &tape, const ad::ParamStore &s) {
    const Var w = tape.parameter(s, 0);
    return ad::sum(ad::add(ad::square(w), ad::scale(w, 3.0)));
  };
  const auto report = ad::grad_check(fn, store, 1e-4);
  EXPECT_LT(report.max_rel_error, 1e-8);
  EXPECT_EQ(report.entries_checked, 9u);
}

TEST(GradCheck, DeadParameterHasZeroError) {
  ad::ParamStore store;
  store.add("used", Tensor(1, 2, 0.5));
  store.add("dead", Tensor(2, 2, 0.5));
  const ad::ModelFn fn = [](ad::Tape &tape, const ad::ParamStore &s) {
    tape.parameter(s, 1);
    return ad::sum(ad::square(tape.parameter(s, 0)));
  };
  std::vector<Tensor> seen;
  const auto report = ad::grad_check(fn, store, 1e-4,
                                     [&](std::vector<Tensor> &g) { seen = g; });
  EXPECT_LT(report.max_rel_error, 1e-8);
  for (std::size_t i = 0; i < seen[1].size(); ++i)
    EXPECT_EQ(seen[1][i], 0.0);
}

TEST(GradCheck, SignFlipFaultIsDetected) {
  ad::ParamStore store;
  store.add("w", Tensor(2, 2, 0.7));
  const ad::ModelFn fn = [](ad::Tape &tape, const ad::ParamStore &s) {
    return ad::sum(ad::square(tape.parameter(s, 0)));
  };
  const auto report = ad::grad_check(fn, store, 1e-4, [](std::vector<Tensor> &g) {
    for (auto &t: g)
      for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = -t[i];
  });
  EXPECT_GT(report.max_rel_error, 1.0);
}

// Each primitive's pullback against central differences on random inputs.
struct OpCase {
  const char *name;
  std::vector<std::pair<std::size_t, std::size_t>> inputs;
  double lo, hi;
  std::function<Var(const std::vector<Var> &)> op;
};

class PrimitiveGradient: public ::testing::TestWithParam<OpCase> { };

TEST_P(PrimitiveGradient, MatchesCentralDifferences) {
  const OpCase &oc = GetParam();
  Rng rng(11);
  ad::ParamStore store;
  for (std::size_t k = 0; k < oc.inputs.size(); ++k)
    store.add("x" + std::to_string(k),
              random_tensor(oc.inputs[k].first, oc.inputs[k].second, rng, oc.lo, oc.hi));
  Tensor weights;
  {
    ad::Tape probe;
    std::vector<Var> xs;
    for (std::size_t k = 0; k < store.size(); ++k)
      xs.push_back(probe.parameter(store, k));
    const Var y = oc.op(xs);
    weights = random_tensor(y.rows(), y.cols(), rng);
  }
  const ad::ModelFn fn = [&](ad::Tape &tape, const ad::ParamStore &s) {
    std::vector<Var> xs;
    for (std::size_t k = 0; k < s.size(); ++k)
      xs.push_back(tape.parameter(s, k));
    return weighted_sum(oc.op(xs), weights);
  };
  const auto report = ad::grad_check(fn, store, 1e-6);
  EXPECT_LT(report.max_rel_error, 1e-6) << oc.name << " worst " << report.worst_param;
}

namespace {
const std::vector<std::pair<std::size_t, std::size_t>> kTriangle = { { 0, 1 },
                                                                      { 0, 2 },
                                                                      { 1, 2 } };
const Tensor kNoise = Tensor::from_rows({ { 0.3, -1.2, 0.8 }, { 1.5, -0.4, 0.1 } });
}  // namespace

INSTANTIATE_TEST_SUITE_P(
    Ops, PrimitiveGradient,
    ::testing::Values(
        OpCase { "matmul", { { 2, 3 }, { 3, 4 } }, -1, 1,
                 [](auto &x) { return ad::matmul(x[0], x[1]); } },
        OpCase { "add", { { 2, 3 }, { 2, 3 } }, -1, 1,
                 [](auto &x) { return ad::add(x[0], x[1]); } },
        OpCase { "sub", { { 2, 3 }, { 2, 3 } }, -1, 1,
                 [](auto &x) { return ad::sub(x[0], x[1]); } },
        OpCase { "mul", { { 2, 3 }, { 2, 3 } }, -1, 1,
                 [](auto &x) { return ad::mul(x[0], x[1]); } },
        OpCase { "scale", { { 2, 3 } }, -1, 1, [](auto &x) { return ad::scale(x[0], -2.5); } },
        OpCase { "add_scalar", { { 2, 3 } }, -1, 1,
                 [](auto &x) { return ad::add_scalar(x[0], 0.7); } },
        OpCase { "add_bias", { { 3, 4 }, { 1, 4 } }, -1, 1,
                 [](auto &x) { return ad::add_bias(x[0], x[1]); } },
        OpCase { "sigmoid", { { 2, 3 } }, -3, 3, [](auto &x) { return ad::sigmoid(x[0]); } },
        OpCase { "tanh", { { 2, 3 } }, -2, 2, [](auto &x) { return ad::tanh(x[0]); } },
        OpCase { "exp", { { 2, 3 } }, -2, 2, [](auto &x) { return ad::exp(x[0]); } },
        OpCase { "log", { { 2, 3 } }, 0.5, 3, [](auto &x) { return ad::log(x[0]); } },
        OpCase { "sqrt", { { 2, 3 } }, 0.5, 3, [](auto &x) { return ad::sqrt(x[0]); } },
        OpCase { "square", { { 2, 3 } }, -2, 2, [](auto &x) { return ad::square(x[0]); } },
        OpCase { "sum", { { 2, 3 } }, -1, 1, [](auto &x) { return ad::sum(x[0]); } },
        OpCase { "mean", { { 2, 3 } }, -1, 1, [](auto &x) { return ad::mean(x[0]); } },
        OpCase { "concat_cols", { { 2, 3 }, { 2, 2 } }, -1, 1,
                 [](auto &x) { return ad::concat_cols(x[0], x[1]); } },
        OpCase { "slice_cols", { { 3, 5 } }, -1, 1,
                 [](auto &x) { return ad::slice_cols(x[0], 1, 4); } },
        OpCase { "slice_rows", { { 4, 2 } }, -1, 1,
                 [](auto &x) { return ad::slice_rows(x[0], 1, 3); } },
        OpCase { "edge_aggregate", { { 3, 4 }, { 3, 2 } }, -1, 1,
                 [](auto &x) { return ad::edge_aggregate(x[0], x[1], kTriangle); } },
        OpCase { "reparam_sample", { { 2, 3 }, { 2, 3 } }, 0.3, 2,
                 [](auto &x) { return ad::reparam_sample(x[0], x[1], kNoise); } },
        OpCase { "reparam_sample_logvar", { { 2, 3 }, { 2, 3 } }, -1, 1,
                 [](auto &x) { return ad::reparam_sample_logvar(x[0], x[1], kNoise); } }),
    [](const auto &info) { return std::string(info.param.name); });

TEST(Autodiff, EdgeAggregateMatchesDirectSum) {
  Rng rng(12);
  const std::size_t m = 4, d = 3;
  const Tensor nodes = random_tensor(m, d, rng);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      pairs.emplace_back(i, j);
  const Tensor edges = random_tensor(pairs.size(), d * d, rng);
  ad::Tape tape;
  const Tensor out =
      ad::edge_aggregate(tape.constant(edges), tape.constant(nodes), pairs).value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      double want = 0.0;
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [u, v] = pairs[p];
        if (u != i && v != i)
          continue;
        const std::size_t j = u == i ? v : u;
        for (std::size_t b = 0; b < d; ++b)
          want += edges(p, a * d + b) * nodes(j, b);
      }
      EXPECT_NEAR(out(i, a), want, 1e-12);
    }
}

TEST(Autodiff, BackwardIsLinear) {
  Rng rng(13);
  const Tensor x0 = random_tensor(3, 3, rng);
  auto grads = [&](double a, double b) {
    ad::Tape tape;
    const Var x = tape.variable(x0);
    const Var f = ad::sum(ad::tanh(x));
    const Var g = ad::sum(ad::square(ad::sigmoid(x)));
    tape.backward(ad::add(ad::scale(f, a), ad::scale(g, b)));
    return tape.grad(x);
  };
  const Tensor gf = grads(1, 0), gg = grads(0, 1), gc = grads(2.5, -0.75);
  for (std::size_t i = 0; i < x0.size(); ++i)
    EXPECT_NEAR(gc[i], 2.5 * gf[i] - 0.75 * gg[i], 1e-12);
}

TEST(Autodiff, ReplayIsBitIdentical) {
  Rng rng(14);
  const Tensor x0 = random_tensor(4, 3, rng);
  const Tensor w0 = random_tensor(3, 2, rng);
  auto run = [&] {
    ad::Tape tape;
    const Var x = tape.variable(x0);
    tape.backward(ad::sum(ad::tanh(ad::matmul(x, tape.constant(w0)))));
    return tape.grad(x);
  };
  EXPECT_EQ(run(), run());
}

TEST(ParamStore, SaveLoadRoundTripIsBitExact) {
  Rng rng(15);
  ad::ParamStore store;
  store.add("a", random_tensor(3, 4, rng));
  store.add("b.c", random_tensor(1, 7, rng));
  std::stringstream ss;
  store.save(ss);
  EXPECT_EQ(ad::ParamStore::load(ss), store);
}

TEST(ParamStore, RejectsDuplicateNamesAndCorruptInput) {
  ad::ParamStore store;
  store.add("a", Tensor(1, 1));
  EXPECT_THROW(store.add("a", Tensor(1, 1)), std::invalid_argument);
  std::stringstream ss;
  store.save(ss);
  const std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(ad::ParamStore::load(truncated), std::runtime_error);
  std::stringstream garbage("not a parameter file");
  EXPECT_THROW(ad::ParamStore::load(garbage), std::runtime_error);
}

TEST(Tensor, ZeroRowsKeepColumnCount) {
  const Tensor t(0, 5);
  EXPECT_EQ(t.rows(), 0u);
  EXPECT_EQ(t.cols(), 5u);
  ad::Tape tape;
  const Var e = tape.variable(Tensor(0, 4));
  const Var w = tape.variable(Tensor(4, 3, 1.0));
  EXPECT_EQ(ad::matmul(e, w).cols(), 3u);
}
