#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "groundnet/rng.hpp"

namespace groundnet {

// Dense row-major array of doubles. Rank 0 is not used; scalars are
// shape {1}. Values are expected to stay finite; ops that produce a
// NaN/Inf raise NonFiniteValue.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape);

  static Tensor zeros(std::vector<std::int64_t> shape);
  static Tensor full(std::vector<std::int64_t> shape, double value);
  static Tensor scalar(double value);
  static Tensor from(std::vector<std::int64_t> shape, std::vector<double> values);
  static Tensor vector(std::vector<double> values);

  // Uniform in +-sqrt(6 / (rows + cols)); 2-D shapes only.
  static Tensor xavier(std::vector<std::int64_t> shape, Rng& rng);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  std::int64_t dim(std::int64_t axis) const { return shape_[static_cast<std::size_t>(axis)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& at(std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double at(std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  double& at(std::int64_t i, std::int64_t j) { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
  double at(std::int64_t i, std::int64_t j) const { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  // Index of the largest element (first one on ties).
  std::int64_t argmax() const;

  std::string shape_string() const;

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  std::vector<std::int64_t> shape_;
  std::vector<double> data_;
};

}  // namespace groundnet
