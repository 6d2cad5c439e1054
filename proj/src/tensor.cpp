#include "fsrcnn/tensor.hpp"

#include <algorithm>
#include <limits>

#include "fsrcnn/errors.hpp"

namespace fsrcnn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

std::size_t checked_numel(Shape shape) {
  constexpr std::size_t kMax = std::numeric_limits<std::ptrdiff_t>::max() / sizeof(float);
  std::size_t total = 1;
  for (std::size_t extent : {shape.n, shape.c, shape.h, shape.w}) {
    if (extent == 0) return 0;
    if (total > kMax / extent) throw SizeError("tensor shape " + shape.str() + " is too large");
    total *= extent;
  }
  return total;
}

Tensor::Tensor(Shape shape) : shape_(shape), data_(checked_numel(shape), 0.0f) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != checked_numel(shape)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape.str());
  }
}

Tensor Tensor::filled(Shape shape, float value) {
  Tensor t;
  t.shape_ = shape;
  t.data_.assign(checked_numel(shape), value);
  return t;
}

std::array<std::size_t, 4> Tensor::index(std::size_t off) const {
  std::array<std::size_t, 4> idx{};
  idx[3] = off % shape_.w;
  off /= shape_.w;
  idx[2] = off % shape_.h;
  off /= shape_.h;
  idx[1] = off % shape_.c;
  idx[0] = off / shape_.c;
  return idx;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (checked_numel(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  return Tensor(shape, data_);
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

Tensor new_filled(Shape shape, float value) { return Tensor::filled(shape, value); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

Tensor& axpy_into(Tensor& dst, float alpha, const Tensor& src) {
  require_same_shape(dst, src, "axpy_into");
  float* d = dst.data();
  const float* s = src.data();
  const std::size_t n = dst.size();
  for (std::size_t i = 0; i < n; ++i) d[i] += alpha * s[i];
  return dst;
}

double mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  if (a.empty()) throw DomainError("mse of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += diff * diff;
  }
  return acc / static_cast<double>(a.size());
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

}  // namespace fsrcnn
