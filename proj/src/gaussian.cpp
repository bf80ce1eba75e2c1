//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace cvgae {

using ad::Var;

void GaussianSet::validate() const {
  if (mean.rows() != variance.rows() || mean.cols() != variance.cols())
    throw ShapeError("gaussian set: mean " + mean.shape_string()
                     + " and variance " + variance.shape_string() + " differ");
  for (double v: variance.values())
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("gaussian set: variance must be positive");
}

GaussianSet GaussianVars::values() const {
  GaussianSet g { mean.value(), Tensor(mean.rows(), mean.cols()) };
  const Tensor &lv = log_variance.value();
  for (std::size_t i = 0; i < lv.size(); ++i)
    g.variance[i] = std::exp(lv[i]);
  return g;
}

GaussianVars constant_gaussian(ad::Tape &tape, const GaussianSet &g) {
  g.validate();
  Tensor lv(g.variance.rows(), g.variance.cols());
  for (std::size_t i = 0; i < lv.size(); ++i)
    lv[i] = std::log(g.variance[i]);
  return { tape.constant(g.mean), tape.constant(std::move(lv)) };
}

namespace {
  void require_match(const GaussianVars &a, const GaussianVars &b) {
    const Tensor &x = a.mean.value();
    const Tensor &y = b.mean.value();
    if (x.rows() != y.rows() || x.cols() != y.cols())
      throw ShapeError("kl_diag: shape mismatch " + x.shape_string() + " vs "
                       + y.shape_string());
  }
}  // namespace

// log(sp/sq) + (sq^2 + (mq - mp)^2) / (2 sp^2) - 1/2, written with
// log-variances: 0.5 (lvp - lvq) + 0.5 (exp(lvq) + d^2) exp(-lvp) - 0.5.
Var kl_diag(const GaussianVars &q, const GaussianVars &p) {
  require_match(q, p);
  Var log_ratio = ad::scale(ad::sub(p.log_variance, q.log_variance), 0.5);
  Var diff = ad::sub(q.mean, p.mean);
  Var spread = ad::add(ad::exp(q.log_variance), ad::square(diff));
  Var quad = ad::mul(spread, ad::exp(ad::scale(p.log_variance, -1.0)));
  Var terms = ad::add_scalar(ad::add(log_ratio, ad::scale(quad, 0.5)), -0.5);
  return ad::sum(terms);
}

// Against N(0, 1): 0.5 (exp(lv) + mu^2 - 1 - lv).
Var kl_unconditional(const GaussianVars &p) {
  Var spread = ad::add(ad::exp(p.log_variance), ad::square(p.mean));
  Var terms = ad::scale(ad::add_scalar(ad::sub(spread, p.log_variance), -1.0),
                        0.5);
  return ad::sum(terms);
}

Var gaussian_loglik(Var x, const GaussianVars &g) {
  const Tensor &xv = x.value();
  const Tensor &mv = g.mean.value();
  if (xv.rows() != mv.rows() || xv.cols() != mv.cols())
    throw ShapeError("gaussian_loglik: shape mismatch " + xv.shape_string()
                     + " vs " + mv.shape_string());
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Var resid = ad::square(ad::sub(g.mean, x));
  Var quad = ad::mul(resid, ad::exp(ad::scale(g.log_variance, -1.0)));
  // -(r^2)/(2 s^2) - 0.5 log(s^2) - 0.5 log(2 pi)
  Var terms = ad::add_scalar(
      ad::scale(ad::add(quad, g.log_variance), -0.5), -half_log_2pi);
  return ad::sum(terms);
}

double kl_diag(const GaussianSet &q, const GaussianSet &p) {
  ad::Tape tape;
  return kl_diag(constant_gaussian(tape, q), constant_gaussian(tape, p))
      .value()
      .item();
}

double kl_unconditional(const GaussianSet &p) {
  ad::Tape tape;
  return kl_unconditional(constant_gaussian(tape, p)).value().item();
}

double gaussian_loglik(const Tensor &x, const GaussianSet &g) {
  ad::Tape tape;
  return gaussian_loglik(tape.constant(x), constant_gaussian(tape, g))
      .value()
      .item();
}

Tensor to_tensor(const Conformation &conf) {
  Tensor t(conf.size(), 3);
  for (std::size_t i = 0; i < conf.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k)
      t(i, k) = conf.coords[i][k];
  return t;
}

Conformation to_conformation(const Tensor &coords) {
  if (coords.cols() != 3)
    throw ShapeError("coordinates must have 3 columns, got "
                     + coords.shape_string());
  Conformation c;
  c.coords.resize(coords.rows());
  for (std::size_t i = 0; i < coords.rows(); ++i)
    for (std::size_t k = 0; k < 3; ++k)
      c.coords[i][k] = coords(i, k);
  return c;
}

}  // namespace cvgae
