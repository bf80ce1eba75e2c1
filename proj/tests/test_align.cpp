//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cvgae/align.hpp"

#include "oracles.hpp"
#include "synth.hpp"

using namespace cvgae;

namespace {

Vec3 random_vec(Rng &rng, double scale) {
  return { scale * standard_normal(rng), scale * standard_normal(rng),
           scale * standard_normal(rng) };
}

double det(const RigidTransform &t) {
  const auto &r = t.rotation;
  return r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
         - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
         + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
}

}  // namespace

TEST(Rmsd, Examples) {
  Rng rng(1);
  const Conformation a = synth::random_conformation(5, rng);
  EXPECT_EQ(rmsd(a, a), 0.0);
  const Conformation p { { { 0, 0, 0 }, { 2, 0, 0 } } };
  const Conformation q { { { 1, 0, 0 }, { 2, 1, 0 } } };
  EXPECT_EQ(rmsd(p, q), 1.0);
}

TEST(Rmsd, MatchesSummationOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Conformation a = synth::random_conformation(6, rng, 2.0);
    const Conformation b = synth::random_conformation(6, rng, 2.0);
    EXPECT_NEAR(rmsd(a, b), synth::rmsd_oracle(a, b), 1e-12);
    const std::vector<bool> mask { true, false, true, true, false, true };
    EXPECT_NEAR(rmsd(a, b, mask), synth::rmsd_oracle(a, b, mask), 1e-12);
  }
}

// Property: symmetric, non-negative, zero only on identical arrays.
TEST(Rmsd, Pseudometric) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Conformation a = synth::random_conformation(4, rng);
    Conformation b = a;
    b.coords[trial % 4][trial % 3] += 1e-6 * (1 + uniform01(rng));
    EXPECT_EQ(rmsd(a, b), rmsd(b, a));
    EXPECT_GT(rmsd(a, b), 0.0);
    EXPECT_EQ(rmsd(a, a), 0.0);
  }
}

TEST(Rmsd, Errors) {
  const Conformation a { { { 0, 0, 0 }, { 1, 0, 0 } } };
  const Conformation b { { { 0, 0, 0 } } };
  EXPECT_THROW(rmsd(a, b), std::invalid_argument);
  EXPECT_THROW(rmsd(a, a, { false, false }), std::invalid_argument);
  EXPECT_THROW(rmsd(a, a, { true }), std::invalid_argument);
  EXPECT_THROW(kabsch_align(a, a, { false, false }), std::invalid_argument);
}

TEST(KabschAlign, SelfAlignmentIsIdentity) {
  Rng rng(4);
  const Conformation a = synth::random_conformation(6, rng, 2.0);
  const Alignment al = kabsch_align(a, a);
  EXPECT_NEAR(al.rmsd, 0.0, 1e-9);
  for (int r = 0; r < 3; ++r) {
    EXPECT_NEAR(al.transform.translation[r], 0.0, 1e-9);
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(al.transform.rotation[r][c], r == c ? 1.0 : 0.0, 1e-9);
  }
}

TEST(KabschAlign, RecoversRigidMotion) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Conformation a = synth::random_conformation(3 + trial % 8, rng, 2.0);
    const Conformation b =
        synth::transform(a, synth::random_rotation(rng), random_vec(rng, 10.0));
    const Alignment al = kabsch_align(a, b);
    EXPECT_LT(al.rmsd, 1e-9);
    EXPECT_NEAR(det(al.transform), 1.0, 1e-12);
  }
}

TEST(KabschAlign, TransformAppliesToUnmaskedAtoms) {
  Rng rng(6);
  const Conformation a = synth::random_conformation(6, rng, 2.0);
  Conformation b = synth::transform(a, synth::random_rotation(rng), random_vec(rng, 3.0));
  b.coords[5] = { 50, 50, 50 };
  const std::vector<bool> mask { true, true, true, true, true, false };
  const Alignment al = kabsch_align(a, b, mask);
  EXPECT_LT(al.rmsd, 1e-9);
  EXPECT_EQ(al.aligned.size(), 6u);
  EXPECT_EQ(al.aligned.coords[5], al.transform.apply(a.coords[5]));
  EXPECT_GT(rmsd(al.aligned, b), 1.0);
}

// Property: no random rigid motion beats the superposition.
TEST(KabschAlign, Optimal) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Conformation a = synth::random_conformation(7, rng, 2.0);
    const Conformation b = synth::random_conformation(7, rng, 2.0);
    const Alignment al = kabsch_align(a, b);
    for (int k = 0; k < 50; ++k) {
      // Perturb the optimum as well as sampling far from it.
      const Conformation moved = synth::transform(
          k % 2 ? al.aligned : a, synth::random_rotation(rng), random_vec(rng, 0.1));
      EXPECT_LE(al.rmsd, rmsd(moved, b) + 1e-12);
    }
  }
}

TEST(KabschAlign, MirrorImageNeedsProperRotation) {
  const Conformation t = synth::chiral_tetrahedron();
  const Conformation m = synth::mirror(t);
  const Alignment al = kabsch_align(m, t);
  EXPECT_NEAR(det(al.transform), 1.0, 1e-12);
  EXPECT_GT(al.rmsd, 0.1);
  const double grid = synth::grid_min_rmsd(t, m, 10.0);
  EXPECT_LE(al.rmsd, grid + 1e-12);
  EXPECT_LT((grid - al.rmsd) / al.rmsd, 0.05);
}

TEST(KabschAlign, DegenerateSetsStillMinimiseResidual) {
  // Two atoms: the rotation about their axis is free, the RMSD is not.
  const Conformation a { { { 0, 0, 0 }, { 1.5, 0, 0 } } };
  const Conformation b { { { 2, 2, 2 }, { 2, 3.2, 2 } } };
  EXPECT_NEAR(kabsch_align(a, b).rmsd, 0.15, 1e-12);
  const Conformation one { { { 1, 2, 3 } } };
  const Conformation other { { { -4, 0, 9 } } };
  EXPECT_NEAR(kabsch_align(one, other).rmsd, 0.0, 1e-12);
}

TEST(AlignedRmsd, SymmetricInArguments) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Conformation a = synth::random_conformation(6, rng, 2.0);
    const Conformation b = synth::random_conformation(6, rng, 2.0);
    EXPECT_NEAR(aligned_rmsd(a, b), aligned_rmsd(b, a), 1e-9);
  }
}

TEST(AlignedLoglik, PerfectReconstruction) {
  Rng rng(9);
  const Conformation a = synth::random_conformation(5, rng, 2.0);
  const GaussianSet g { to_tensor(a), Tensor(5, 3, 1.0) };
  EXPECT_NEAR(aligned_loglik(g, a), -15.0 * 0.5 * std::log(2 * std::numbers::pi), 1e-9);
}

// Property: a rigid motion of the reference changes nothing.
TEST(AlignedLoglik, RigidMotionInvariant) {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianSet g { normal_tensor(6, 3, rng), Tensor(6, 3, 1.0) };
    const Conformation ref = synth::random_conformation(6, rng, 1.5);
    const Conformation moved =
        synth::transform(ref, synth::random_rotation(rng), random_vec(rng, 5.0));
    EXPECT_NEAR(aligned_loglik(g, ref), aligned_loglik(g, moved), 1e-9);
  }
}

TEST(AlignedLoglik, NeverBelowUnaligned) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianSet g { normal_tensor(6, 3, rng), Tensor(6, 3, 1.0) };
    const Conformation ref = synth::random_conformation(6, rng, 1.5);
    EXPECT_GE(aligned_loglik(g, ref) + 1e-12, gaussian_loglik(to_tensor(ref), g));
  }
}

TEST(AlignedLoglik, TapeFormTreatsAlignmentAsConstant) {
  Rng rng(12);
  const Conformation ref = synth::random_conformation(5, rng, 1.5);
  const Tensor mean = normal_tensor(5, 3, rng);
  ad::Tape tape;
  const ad::Var mu = tape.variable(mean);
  const ad::Var lv = tape.constant(Tensor(5, 3));
  const ad::Var ll = aligned_loglik(GaussianVars { mu, lv }, ref);
  tape.backward(ll);
  // d/d mu of -(mu - x)^2 / 2 is (x - mu), with x the superposed reference.
  const Alignment al = kabsch_align(ref, to_conformation(mean));
  const Tensor g = tape.grad(mu);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      EXPECT_NEAR(g(i, k), al.aligned.coords[i][k] - mean(i, k), 1e-12);
}
