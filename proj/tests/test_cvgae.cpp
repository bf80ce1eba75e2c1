//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "cvgae/align.hpp"
#include "cvgae/cvgae.hpp"

#include "synth.hpp"

using namespace cvgae;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

GaussianSet random_set(std::size_t rows, std::size_t cols, Rng &rng) {
  GaussianSet g { normal_tensor(rows, cols, rng), Tensor(rows, cols) };
  for (double &v: g.variance.values())
    v = std::exp(standard_normal(rng));
  return g;
}

// Straight from the univariate formula.
double kl_oracle(const GaussianSet &q, const GaussianSet &p) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.mean.size(); ++i) {
    const double sq = std::sqrt(q.variance[i]), sp = std::sqrt(p.variance[i]);
    const double d = q.mean[i] - p.mean[i];
    s += std::log(sp / sq) + (sq * sq + d * d) / (2 * sp * sp) - 0.5;
  }
  return s;
}

double log_density(double x, double mu, double var) {
  return -0.5 * std::log(2 * std::numbers::pi * var) - (x - mu) * (x - mu) / (2 * var);
}

struct Mol {
  MoleculeRecord record;
  GraphFeatures features;
};

const Vocabulary &vocab() {
  static const Vocabulary v = Vocabulary::from_elements({ "H", "C", "N", "O", "F" });
  return v;
}

Mol molecule_with_atoms(std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  synth::SynthOptions opts;
  opts.min_heavy = 1;
  opts.max_heavy = 4;
  for (;;) {
    MoleculeRecord r = synth::random_molecule(rng, opts, "m");
    if (r.graph.atom_count() == m)
      return Mol { r, featurize(r.graph, vocab()) };
  }
}

ModelConfig small_config(std::uint64_t seed, std::size_t hidden = 8,
                         std::size_t head = 16, std::size_t rounds = 2) {
  ModelConfig c;
  c.mpnn = { rounds, hidden, head };
  c.node_dim = vocab().node_dim();
  c.init_seed = seed;
  return c;
}

}  // namespace

TEST(KlDiag, HandValues) {
  const GaussianSet n01 { Tensor(1, 1, 0.0), Tensor(1, 1, 1.0) };
  const GaussianSet n11 { Tensor(1, 1, 1.0), Tensor(1, 1, 1.0) };
  EXPECT_EQ(kl_diag(n01, n01), 0.0);
  EXPECT_NEAR(kl_diag(n11, n01), 0.5, 1e-12);
  const GaussianSet wide { Tensor(1, 1, 0.0), Tensor(1, 1, 4.0) };
  // log 2 + 1/8 - 1/2
  EXPECT_NEAR(kl_diag(n01, wide), std::log(2.0) - 0.375, 1e-12);
}

TEST(KlDiag, MatchesFormulaOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianSet q = random_set(3, 4, rng), p = random_set(3, 4, rng);
    EXPECT_NEAR(kl_diag(q, p), kl_oracle(q, p), 1e-12);
  }
}

// Property: non-negative, zero only at equality.
TEST(KlDiag, NonNegativeWithEqualityAtIdentity) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const GaussianSet q = random_set(2, 3, rng), p = random_set(2, 3, rng);
    EXPECT_GT(kl_diag(q, p), 0.0);
    EXPECT_NEAR(kl_diag(q, q), 0.0, 1e-10);
  }
}

TEST(KlDiag, InvariantUnderCommonMeanShift) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    GaussianSet q = random_set(2, 3, rng), p = random_set(2, 3, rng);
    const double before = kl_diag(q, p);
    const double shift = 3.0 * standard_normal(rng);
    for (std::size_t i = 0; i < q.mean.size(); ++i) {
      q.mean[i] += shift;
      p.mean[i] += shift;
    }
    EXPECT_NEAR(kl_diag(q, p), before, 1e-12);
  }
}

TEST(KlDiag, AgreesWithMonteCarlo) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const GaussianSet q = random_set(1, 3, rng), p = random_set(1, 3, rng);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
      double v = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double x = q.mean[c] + std::sqrt(q.variance[c]) * standard_normal(rng);
        v += log_density(x, q.mean[c], q.variance[c])
             - log_density(x, p.mean[c], p.variance[c]);
      }
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_LT(std::abs(mean - kl_diag(q, p)), 3 * se);
  }
}

TEST(KlDiag, ShapeMismatchThrows) {
  Rng rng(5);
  EXPECT_THROW(kl_diag(random_set(2, 3, rng), random_set(3, 2, rng)), ShapeError);
}

TEST(KlUnconditional, HandValues) {
  GaussianSet g { Tensor(3, 2, 0.0), Tensor(3, 2, 1.0) };
  EXPECT_EQ(kl_unconditional(g), 0.0);
  g.mean(1, 1) = 1.7;
  EXPECT_NEAR(kl_unconditional(g), 1.7 * 1.7 / 2, 1e-12);
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial)
    EXPECT_GE(kl_unconditional(random_set(2, 2, rng)), 0.0);
}

TEST(GaussianLoglik, Examples) {
  const std::size_t m = 4;
  Rng rng(7);
  const GaussianSet g { normal_tensor(m, 3, rng), Tensor(m, 3, 1.0) };
  const double at_mean = gaussian_loglik(g.mean, g);
  EXPECT_NEAR(at_mean, -3.0 * m * kHalfLog2Pi, 1e-12);
  Tensor off = g.mean;
  off(2, 1) += 1.0;
  EXPECT_NEAR(gaussian_loglik(off, g), at_mean - 0.5, 1e-12);
}

TEST(GaussianLoglik, MatchesDensitySum) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const GaussianSet g = random_set(5, 3, rng);
    const Tensor x = normal_tensor(5, 3, rng);
    double want = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      want += log_density(x[i], g.mean[i], g.variance[i]);
    EXPECT_NEAR(gaussian_loglik(x, g), want, 1e-12);
  }
  EXPECT_THROW(gaussian_loglik(Tensor(4, 3), random_set(5, 3, rng)), ShapeError);
}

TEST(Model, ParameterLayout) {
  const Model model(small_config(1));
  const auto &p = model.params();
  EXPECT_EQ(p.name(0), "shared.node_embed");
  EXPECT_EQ(p.value(model.prior().edge_embed).rows(), kEdgeClasses);
  EXPECT_EQ(p.value(model.posterior().edge_embed).rows(), kEdgeClasses + 1);
  EXPECT_FALSE(model.likelihood().logvar_w.has_value());
  EXPECT_EQ(p.value(model.likelihood().mean_w).cols(), 3u);
  for (std::size_t i = 0; i < p.size(); ++i)
    EXPECT_EQ(p.name(i).find("node_embed") == std::string::npos,
              i != model.node_embed());
}

TEST(Model, AdoptsOnlyMatchingParameters) {
  const Model a(small_config(1));
  EXPECT_NO_THROW(Model(small_config(1), a.params()));
  EXPECT_THROW(Model(small_config(1, 6), a.params()), std::invalid_argument);
  ad::ParamStore wrong;
  wrong.add("x", Tensor(1, 1));
  EXPECT_THROW(Model(small_config(1), wrong), std::invalid_argument);
}

TEST(PriorForward, ShapesAndZeroModel) {
  const Mol mol = molecule_with_atoms(6, 9);
  Model model(small_config(2));
  const GaussianSet g = prior_forward(model, mol.features);
  EXPECT_EQ(g.mean.rows(), 6u);
  EXPECT_EQ(g.mean.cols(), 8u);
  EXPECT_EQ(g.variance.rows(), 6u);
  EXPECT_EQ(g.variance.cols(), 8u);
  for (std::size_t i = 0; i < model.params().size(); ++i)
    model.params().value(i).fill(0.0);
  const GaussianSet z = prior_forward(model, mol.features);
  for (double v: z.mean.values())
    EXPECT_EQ(v, 0.0);
  for (double v: z.variance.values())
    EXPECT_EQ(v, 1.0);
}

TEST(PriorForward, PermutationEquivariant) {
  Rng rng(10);
  const Mol mol = molecule_with_atoms(7, 11);
  const Model model(small_config(3));
  const std::size_t m = mol.record.graph.atom_count();
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t { 0 });
  std::shuffle(perm.begin(), perm.end(), rng);
  MolecularGraph g2 = mol.record.graph;
  for (std::size_t i = 0; i < m; ++i)
    g2.atoms[perm[i]] = mol.record.graph.atoms[i];
  for (auto &b: g2.bonds) {
    b.begin = perm[b.begin];
    b.end = perm[b.end];
  }
  const GaussianSet a = prior_forward(model, mol.features);
  const GaussianSet b = prior_forward(model, featurize(g2, vocab()));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < a.mean.cols(); ++c) {
      EXPECT_NEAR(b.mean(perm[i], c), a.mean(i, c), 1e-9);
      EXPECT_NEAR(b.variance(perm[i], c), a.variance(i, c), 1e-9);
    }
}

TEST(PosteriorForward, RigidMotionInvariantButConformationSensitive) {
  Rng rng(12);
  const Mol mol = molecule_with_atoms(6, 13);
  const Model model(small_config(4));
  const Conformation &x = mol.record.conformation;
  const GaussianSet a = posterior_forward(model, mol.features, x);
  EXPECT_EQ(a.mean.rows(), 6u);
  EXPECT_EQ(a.mean.cols(), 8u);
  const GaussianSet b = posterior_forward(
      model, mol.features,
      synth::transform(x, synth::random_rotation(rng), { 3.0, -2.0, 7.5 }));
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    EXPECT_NEAR(a.mean[i], b.mean[i], 1e-9);
    EXPECT_NEAR(a.variance[i], b.variance[i], 1e-9);
  }
  Conformation y = x;
  for (auto &p: y.coords)
    for (double &c: p)
      c *= 1.3;
  EXPECT_NE(posterior_forward(model, mol.features, y).mean, a.mean);
  EXPECT_THROW(posterior_forward(model, mol.features, Conformation { { { 0, 0, 0 } } }),
               std::invalid_argument);
}

TEST(LikelihoodForward, UnitVarianceAndShape) {
  Rng rng(14);
  const Mol mol = molecule_with_atoms(5, 15);
  const Model model(small_config(5));
  const GaussianSet g =
      likelihood_forward(model, mol.features, normal_tensor(5, 8, rng));
  EXPECT_EQ(g.mean.rows(), 5u);
  EXPECT_EQ(g.mean.cols(), 3u);
  for (double v: g.variance.values())
    EXPECT_EQ(v, 1.0);
  EXPECT_THROW(likelihood_forward(model, mol.features, Tensor(5, 7)), ShapeError);
}

TEST(LikelihoodForward, ZeroLatentsMatchUnconditionedPass) {
  const Mol mol = molecule_with_atoms(5, 16);
  const Model model(small_config(6));
  const GaussianSet with_z =
      likelihood_forward(model, mol.features, Tensor(5, 8, 0.0));
  ad::Tape tape;
  const BoundModel b = bind_model(tape, model);
  const GraphVars g = bind_graph(tape, mol.features);
  const NodeStates s0 =
      init_states(g.node, g.edge, g.pairs, b.node_embed, b.likelihood);
  const GaussianSet plain =
      gaussian_head(run_mpnn(s0, b.likelihood, 2), b.likelihood).values();
  EXPECT_EQ(with_z.mean, plain.mean);
}

TEST(ElboLoss, AlphaZeroIsPlainBound) {
  const Mol mol = molecule_with_atoms(6, 17);
  const Model model(small_config(7));
  Rng r1(18), r2(18);
  const ElboBreakdown a =
      elbo_values(model, mol.features, mol.record.conformation, 0.0, r1);
  EXPECT_NEAR(a.total, a.recon - a.kl_post_prior, 1e-12);
  const ElboBreakdown b =
      elbo_values(model, mol.features, mol.record.conformation, 2.0, r2);
  EXPECT_EQ(a.recon, b.recon);
  EXPECT_NEAR(b.total, b.recon - b.kl_post_prior - 2.0 * b.kl_prior_uncond, 1e-12);
  Rng r3(18);
  EXPECT_THROW(elbo_values(model, mol.features, mol.record.conformation, -1.0, r3),
               std::invalid_argument);
}

TEST(ElboLoss, IdenticalNetworksGiveZeroPosteriorKl) {
  const Mol mol = molecule_with_atoms(6, 19);
  Model model(small_config(8));
  auto &p = model.params();
  const auto copy = [&](std::size_t from, std::size_t to) {
    p.value(to) = p.value(from);
  };
  const NetworkParams &pr = model.prior(), &po = model.posterior();
  // The distance row of the posterior edge embedding is zeroed.
  Tensor edge = p.value(po.edge_embed);
  const Tensor &src = p.value(pr.edge_embed);
  edge.fill(0.0);
  for (std::size_t i = 0; i < src.size(); ++i)
    edge[i] = src[i];
  p.value(po.edge_embed) = edge;
  for (auto [from, to]: std::vector<std::pair<std::size_t, std::size_t>> {
           { pr.message_w, po.message_w }, { pr.message_b, po.message_b },
           { pr.update_w, po.update_w },   { pr.update_u, po.update_u },
           { pr.update_b, po.update_b },   { pr.reset_w, po.reset_w },
           { pr.reset_u, po.reset_u },     { pr.reset_b, po.reset_b },
           { pr.cand_w, po.cand_w },       { pr.cand_u, po.cand_u },
           { pr.cand_b, po.cand_b },       { pr.head_w1, po.head_w1 },
           { pr.head_b1, po.head_b1 },     { pr.head_w2, po.head_w2 },
           { pr.head_b2, po.head_b2 },     { pr.mean_w, po.mean_w },
           { pr.mean_b, po.mean_b },       { *pr.logvar_w, *po.logvar_w },
           { *pr.logvar_b, *po.logvar_b } })
    copy(from, to);
  Rng rng(20);
  const ElboBreakdown e =
      elbo_values(model, mol.features, mol.record.conformation, 1e-5, rng);
  EXPECT_NEAR(e.kl_post_prior, 0.0, 1e-12);
}

TEST(ElboLoss, DeterministicGivenNoiseSeed) {
  const Mol mol = molecule_with_atoms(6, 21);
  const Model model(small_config(9));
  Rng a(22), b(22), c(23);
  const auto x = elbo_values(model, mol.features, mol.record.conformation, 1e-5, a);
  const auto y = elbo_values(model, mol.features, mol.record.conformation, 1e-5, b);
  const auto z = elbo_values(model, mol.features, mol.record.conformation, 1e-5, c);
  EXPECT_EQ(x.total, y.total);
  EXPECT_NE(x.recon, z.recon);
}

TEST(ElboLoss, GradCheckFiveAtoms) {
  const Mol mol = molecule_with_atoms(5, 24);
  Model model(small_config(10));
  const auto report =
      elbo_grad_check(model, mol.features, mol.record.conformation, 1e-5, 25);
  EXPECT_EQ(report.entries_checked, model.params().total_entries());
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst_param << "["
                                        << report.worst_entry << "]";
}

// One atom, d_z = 1: log p(x) = log of the integral over z of
// p(z) p(x | z), evaluated by quadrature. Every ELBO draw must stay below it.
TEST(ElboLoss, LowerBoundsQuadratureLikelihood) {
  MolecularGraph g;
  g.id = "one";
  g.atoms.push_back(Atom { "C", 0 });
  const GraphFeatures f = featurize(g, vocab());
  const Conformation x { { { 0.3, -1.2, 2.0 } } };
  const Model model(small_config(11, 1, 4, 2));

  const GaussianSet prior = prior_forward(model, f);
  const double mu = prior.mean[0], sd = std::sqrt(prior.variance[0]);
  const int n = 4001;
  const double lo = mu - 10 * sd, step = 20 * sd / (n - 1);
  double integral = 0.0;
  for (int k = 0; k < n; ++k) {
    const double z = lo + k * step;
    const GaussianSet lik = likelihood_forward(model, f, Tensor(1, 1, z));
    const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
    integral += w * step * std::exp(log_density(z, mu, prior.variance[0])
                                    + aligned_loglik(lik, x));
  }
  const double log_px = std::log(integral);

  Rng rng(26);
  double avg = 0.0;
  for (int k = 0; k < 200; ++k) {
    const ElboBreakdown e = elbo_values(model, f, x, 0.0, rng);
    EXPECT_LE(e.total, log_px + 1e-9);
    avg += e.total / 200;
  }
  EXPECT_LE(avg, log_px);
}

TEST(Sampling, CountShapeAndDeterminism) {
  const Mol mol = molecule_with_atoms(7, 27);
  const Model model(small_config(12));
  Rng a(28), b(28);
  const auto s1 = sample_conformations(model, mol.features, 12, a);
  const auto s2 = sample_conformations(model, mol.features, 12, b);
  ASSERT_EQ(s1.size(), 12u);
  for (const auto &c: s1) {
    EXPECT_EQ(c.size(), 7u);
    EXPECT_TRUE(c.all_finite());
  }
  EXPECT_EQ(s1, s2);
  EXPECT_NE(s1[0], s1[1]);
  EXPECT_THROW(sample_conformations(model, mol.features, 0, a), std::invalid_argument);
}

TEST(Sampling, ZeroPriorVarianceCollapsesSamples) {
  const Mol mol = molecule_with_atoms(6, 29);
  const Model model(small_config(13));
  Rng rng(30);
  SampleOptions opts;
  opts.zero_prior_variance = true;
  const auto s = sample_conformations(model, mol.features, 5, rng, opts);
  for (const auto &c: s)
    EXPECT_EQ(c, s[0]);
}
