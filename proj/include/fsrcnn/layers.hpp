#pragma once

#include <cstddef>
#include <vector>

#include "fsrcnn/tensor.hpp"

namespace fsrcnn {

// Sliding-window geometry shared by convolution and its transpose.
struct WindowGeometry {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;

  // Output extent of a convolution over `in` pixels; 0 when the window does not fit.
  std::size_t conv_out(std::size_t in) const;
  // Output extent of the transposed convolution over `in` pixels.
  std::size_t deconv_out(std::size_t in) const;
};

struct ConvGrads {
  Tensor grad_in;
  Tensor grad_w;
  std::vector<float> grad_b;
};

struct PReLUGrads {
  Tensor grad_in;
  std::vector<float> grad_a;
};

// Conv(f, n, c): cross-correlation with zero padding, weights (out, in, f, f).
class ConvLayer {
 public:
  ConvLayer() = default;
  // Stride 1 with pad f/2, so spatial size is preserved.
  ConvLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);
  ConvLayer(std::size_t in_channels, std::size_t out_channels, WindowGeometry geometry);

  Tensor forward(const Tensor& input) const;
  ConvGrads backward(const Tensor& input, const Tensor& grad_out) const;

  std::size_t in_channels() const { return weights.shape().c; }
  std::size_t out_channels() const { return weights.shape().n; }
  std::size_t kernel() const { return geometry.kernel; }
  Shape output_shape(const Shape& input) const;

  Tensor weights;
  std::vector<float> bias;
  WindowGeometry geometry;
};

// DeConv(f, n, c): transposed convolution with weights (in, out, f, f). The
// output is cropped by `geometry.pad` on each side, so an h-pixel input
// yields stride*(h-1) + f - 2*pad pixels.
class DeconvLayer {
 public:
  DeconvLayer() = default;
  // Kernel 9, crop 4: an h-pixel input yields stride*h - stride + 1 pixels.
  DeconvLayer(std::size_t in_channels, std::size_t out_channels, std::size_t stride);
  DeconvLayer(std::size_t in_channels, std::size_t out_channels, WindowGeometry geometry);

  Tensor forward(const Tensor& input) const;
  ConvGrads backward(const Tensor& input, const Tensor& grad_out) const;

  std::size_t in_channels() const { return weights.shape().n; }
  std::size_t out_channels() const { return weights.shape().c; }
  std::size_t stride() const { return geometry.stride; }
  Shape output_shape(const Shape& input) const;

  Tensor weights;
  std::vector<float> bias;
  WindowGeometry geometry;
};

// f(x) = max(x, 0) + a_c * min(x, 0) with one slope per channel. A layer that
// is not learnable is a plain ReLU and keeps its slopes at zero.
class PReLULayer {
 public:
  PReLULayer() = default;
  PReLULayer(std::size_t channels, float init_slope, bool learnable = true);

  Tensor forward(const Tensor& input) const;
  PReLUGrads backward(const Tensor& input, const Tensor& grad_out) const;

  std::size_t channels() const { return slopes.size(); }

  std::vector<float> slopes;
  bool learnable = true;
};

namespace detail {

// Unfolds `input` into a (C*k*k) x (N*oh*ow) row-major matrix.
void im2col(const Tensor& input, const WindowGeometry& g, std::size_t out_h, std::size_t out_w,
            std::vector<float>& cols);

// Adjoint of im2col: accumulates columns back into `output` (which must be zeroed
// or hold a prior value to add onto).
void col2im(const std::vector<float>& cols, const WindowGeometry& g, std::size_t cols_h,
            std::size_t cols_w, Tensor& output);

}  // namespace detail

}  // namespace fsrcnn
