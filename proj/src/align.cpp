//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/align.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace cvgae {
namespace {
  std::size_t masked_count(std::size_t n, const std::vector<bool> &mask) {
    if (mask.empty())
      return n;
    if (mask.size() != n)
      throw std::invalid_argument("atom mask length does not match atom count");
    std::size_t c = 0;
    for (bool b: mask)
      c += b ? 1 : 0;
    return c;
  }

  bool selected(const std::vector<bool> &mask, std::size_t i) {
    return mask.empty() || mask[i];
  }
}  // namespace

Vec3 RigidTransform::apply(const Vec3 &x) const {
  Vec3 y = translation;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      y[r] += rotation[r][c] * x[c];
  return y;
}

Conformation RigidTransform::apply(const Conformation &conf) const {
  Conformation out;
  out.coords.reserve(conf.size());
  for (const auto &x: conf.coords)
    out.coords.push_back(apply(x));
  return out;
}

Alignment kabsch_align(const Conformation &reference,
                       const Conformation &target,
                       const std::vector<bool> &mask) {
  const std::size_t n = reference.size();
  if (target.size() != n)
    throw std::invalid_argument("kabsch_align: atom counts differ");
  const std::size_t m = masked_count(n, mask);
  if (m == 0)
    throw std::invalid_argument("kabsch_align: no atoms selected");

  Eigen::Vector3d c_ref = Eigen::Vector3d::Zero();
  Eigen::Vector3d c_tgt = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    if (!selected(mask, i))
      continue;
    c_ref += Eigen::Vector3d(reference.coords[i].data());
    c_tgt += Eigen::Vector3d(target.coords[i].data());
  }
  c_ref /= static_cast<double>(m);
  c_tgt /= static_cast<double>(m);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    if (!selected(mask, i))
      continue;
    const Eigen::Vector3d p = Eigen::Vector3d(reference.coords[i].data()) - c_ref;
    const Eigen::Vector3d q = Eigen::Vector3d(target.coords[i].data()) - c_tgt;
    cov += p * q.transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU
                                                 | Eigen::ComputeFullV);
  const Eigen::Matrix3d &u = svd.matrixU();
  const Eigen::Matrix3d &v = svd.matrixV();
  Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
  // Reflection optimum: negate the axis of the smallest singular value.
  if ((v * u.transpose()).determinant() < 0.0)
    flip(2, 2) = -1.0;
  const Eigen::Matrix3d rot = v * flip * u.transpose();
  const Eigen::Vector3d trans = c_tgt - rot * c_ref;

  Alignment out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c)
      out.transform.rotation[r][c] = rot(r, c);
    out.transform.translation[r] = trans(r);
  }
  out.aligned = out.transform.apply(reference);
  out.rmsd = rmsd(out.aligned, target, mask);
  return out;
}

double rmsd(const Conformation &a, const Conformation &b,
            const std::vector<bool> &mask) {
  const std::size_t n = a.size();
  if (b.size() != n)
    throw std::invalid_argument("rmsd: atom counts differ");
  const std::size_t m = masked_count(n, mask);
  if (m == 0)
    throw std::invalid_argument("rmsd: empty atom mask");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!selected(mask, i))
      continue;
    for (int k = 0; k < 3; ++k) {
      const double d = a.coords[i][k] - b.coords[i][k];
      acc += d * d;
    }
  }
  return std::sqrt(acc / static_cast<double>(m));
}

double aligned_rmsd(const Conformation &a, const Conformation &b,
                    const std::vector<bool> &mask) {
  return kabsch_align(b, a, mask).rmsd;
}

double aligned_loglik(const GaussianSet &predicted,
                      const Conformation &reference) {
  predicted.validate();
  const Alignment al =
      kabsch_align(reference, to_conformation(predicted.mean));
  return gaussian_loglik(to_tensor(al.aligned), predicted);
}

ad::Var aligned_loglik(const GaussianVars &predicted,
                       const Conformation &reference) {
  const Alignment al =
      kabsch_align(reference, to_conformation(predicted.mean.value()));
  ad::Tape &tape = *predicted.mean.tape;
  return gaussian_loglik(tape.constant(to_tensor(al.aligned)), predicted);
}

}  // namespace cvgae
