//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvgae {

class ShapeError: public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major tensor of 64-bit floats.
///
/// Every tensor that flows through the tape is rank 2; scalars are 1x1 and
/// vectors are 1xn. Higher ranks are only used for storage.
class Tensor {
public:
  Tensor(): Tensor(0, 0) { }

  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : shape_ { rows, cols }, values_(rows * cols, fill) { }

  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  static Tensor from_rows(const std::vector<std::vector<double>> &rows);

  const std::vector<std::size_t> &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }

  std::size_t rows() const { return shape_.empty() ? 1 : shape_[0]; }
  std::size_t cols() const {
    if (shape_.size() < 2)
      return shape_.empty() ? 1 : shape_[0];
    std::size_t c = 1;
    for (std::size_t k = 1; k < shape_.size(); ++k)
      c *= shape_[k];
    return c;
  }

  double &operator()(std::size_t r, std::size_t c) {
    return values_[r * cols() + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }

  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double item() const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double *data() { return values_.data(); }
  const double *data() const { return values_.data(); }

  bool same_shape(const Tensor &other) const {
    return shape_ == other.shape_;
  }

  std::string shape_string() const;

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor &a, const Tensor &b) = default;

private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

}  // namespace cvgae
