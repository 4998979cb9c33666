#include "groundnet/tensor.hpp"

#include <cmath>
#include <sstream>

#include "groundnet/errors.hpp"

namespace groundnet {

namespace {

std::int64_t product(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    if (d < 0) throw ShapeMismatch("negative dimension in tensor shape");
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<std::size_t>(product(shape_)), 0.0);
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::int64_t> shape, double value) {
  Tensor t(std::move(shape));
  for (double& x : t.data_) x = value;
  return t;
}

Tensor Tensor::scalar(double value) { return full({1}, value); }

Tensor Tensor::from(std::vector<std::int64_t> shape, std::vector<double> values) {
  Tensor t;
  t.shape_ = std::move(shape);
  if (product(t.shape_) != static_cast<std::int64_t>(values.size())) {
    throw ShapeMismatch("value count does not match shape " + t.shape_string());
  }
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = static_cast<std::int64_t>(values.size());
  return from({n}, std::move(values));
}

Tensor Tensor::xavier(std::vector<std::int64_t> shape, Rng& rng) {
  if (shape.size() != 2) throw ShapeMismatch("xavier init requires a 2-D shape");
  const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
  Tensor t(std::move(shape));
  for (double& x : t.data_) x = rng.uniform(-bound, bound);
  return t;
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::int64_t Tensor::argmax() const {
  std::int64_t best = 0;
  for (std::int64_t i = 1; i < size(); ++i) {
    if (data_[static_cast<std::size_t>(i)] > data_[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ",";
    os << shape_[i];
  }
  os << ")";
  return os.str();
}

}  // namespace groundnet
