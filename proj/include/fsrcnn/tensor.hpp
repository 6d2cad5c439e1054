#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fsrcnn {

// (batch, channels, height, width)
struct Shape {
  std::size_t n = 0, c = 0, h = 0, w = 0;

  std::size_t numel() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense NCHW float tensor, width innermost.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<float> data);

  static Tensor filled(Shape shape, float value);
  static Tensor zeros(Shape shape) { return filled(shape, 0.0f); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t offset(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return ((b * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  // Inverse of offset().
  std::array<std::size_t, 4> index(std::size_t offset) const;

  float& operator()(std::size_t b, std::size_t c, std::size_t y, std::size_t x) {
    return data_[offset(b, c, y, x)];
  }
  float operator()(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[offset(b, c, y, x)];
  }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  // Pointer to the (b, c) plane.
  float* plane(std::size_t b, std::size_t c) { return data_.data() + offset(b, c, 0, 0); }
  const float* plane(std::size_t b, std::size_t c) const {
    return data_.data() + offset(b, c, 0, 0);
  }

  // Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;
  std::vector<float> flatten() const { return data_; }

  void fill(float value);
  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

// Throws SizeError when the extent product overflows.
std::size_t checked_numel(Shape shape);

Tensor new_filled(Shape shape, float value);

// dst += alpha * src
Tensor& axpy_into(Tensor& dst, float alpha, const Tensor& src);

// Mean squared difference over all elements.
double mse(const Tensor& a, const Tensor& b);

// Sum of elementwise products, accumulated in double.
double dot(const Tensor& a, const Tensor& b);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace fsrcnn
