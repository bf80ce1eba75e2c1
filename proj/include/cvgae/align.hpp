//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <vector>

#include "cvgae/gaussian.hpp"
#include "cvgae/molgraph.hpp"

namespace cvgae {

/// x -> rotation * x + translation, with rotation proper (det = +1).
struct RigidTransform {
  std::array<std::array<double, 3>, 3> rotation { { { 1, 0, 0 },
                                                    { 0, 1, 0 },
                                                    { 0, 0, 1 } } };
  Vec3 translation { 0, 0, 0 };

  Vec3 apply(const Vec3 &x) const;
  Conformation apply(const Conformation &conf) const;
};

struct Alignment {
  Conformation aligned;  // every atom of the reference, transformed
  RigidTransform transform;
  double rmsd = 0.0;  // over the masked atoms
};

/// Least-squares superposition of @p reference onto @p target over the
/// masked atoms (empty mask: all atoms), restricted to proper rotations.
///
/// For fewer than three non-collinear masked atoms the rotation is not
/// unique; any optimal one is returned.
Alignment kabsch_align(const Conformation &reference,
                       const Conformation &target,
                       const std::vector<bool> &mask = {});

/// Root-mean-square deviation of index-matched atoms, without alignment.
double rmsd(const Conformation &a, const Conformation &b,
            const std::vector<bool> &mask = {});

/// RMSD after optimally superposing @p b onto @p a.
double aligned_rmsd(const Conformation &a, const Conformation &b,
                    const std::vector<bool> &mask = {});

/// Log-density of @p reference after superposing it onto the predicted
/// means, using every atom.
double aligned_loglik(const GaussianSet &predicted,
                      const Conformation &reference);

/// Tape form of aligned_loglik. The superposition is computed from the
/// current mean values and enters the graph as a constant.
ad::Var aligned_loglik(const GaussianVars &predicted,
                       const Conformation &reference);

}  // namespace cvgae
