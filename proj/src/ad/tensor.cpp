#include "mlsimp/ad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace mlsimp::ad {

namespace {

std::size_t volume(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_rank(const std::vector<std::size_t>& shape) {
  if (shape.size() > 3) throw std::invalid_argument("tensor rank above 3 is not supported");
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  check_rank(shape_);
  data_.assign(volume(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_rank(shape_);
  if (data_.size() != volume(shape_)) {
    throw std::invalid_argument("tensor value count does not match shape " + shape_string(shape_));
  }
}

std::size_t Tensor::rows() const {
  if (shape_.size() < 2) return 1;
  return shape_[shape_.size() - 2];
}

std::size_t Tensor::cols() const {
  if (shape_.empty()) return 1;
  return shape_.back();
}

double Tensor::item() const {
  if (data_.size() != 1) throw std::invalid_argument("item() needs a single-element tensor");
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace mlsimp::ad
