#include "fsrcnn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstring>

#include "fsrcnn/errors.hpp"

namespace fsrcnn {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void check_channels(std::size_t got, std::size_t want, const char* layer) {
  if (got != want) {
    throw ShapeError(std::string(layer) + ": input has " + std::to_string(got) +
                     " channels, layer expects " + std::to_string(want));
  }
}

// NCHW -> C x (N*H*W); the batch index is the outer part of the column index.
std::vector<float> to_channel_major(const Tensor& t) {
  const Shape s = t.shape();
  const std::size_t plane = s.plane();
  std::vector<float> out(t.size());
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t c = 0; c < s.c; ++c)
      std::memcpy(out.data() + (c * s.n + b) * plane, t.plane(b, c), plane * sizeof(float));
  return out;
}

Tensor from_channel_major(const float* mat, Shape s) {
  Tensor t(s);
  const std::size_t plane = s.plane();
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t c = 0; c < s.c; ++c)
      std::memcpy(t.plane(b, c), mat + (c * s.n + b) * plane, plane * sizeof(float));
  return t;
}

void add_bias(Tensor& t, const std::vector<float>& bias) {
  const Shape s = t.shape();
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t c = 0; c < s.c; ++c) {
      float* p = t.plane(b, c);
      const float v = bias[c];
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] += v;
    }
}

std::vector<float> channel_sums(const Tensor& t) {
  const Shape s = t.shape();
  std::vector<float> sums(s.c, 0.0f);
  for (std::size_t c = 0; c < s.c; ++c) {
    double acc = 0.0;
    for (std::size_t b = 0; b < s.n; ++b) {
      const float* p = t.plane(b, c);
      for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
    }
    sums[c] = static_cast<float>(acc);
  }
  return sums;
}

}  // namespace

std::size_t WindowGeometry::conv_out(std::size_t in) const {
  const std::size_t padded = in + 2 * pad;
  if (padded < kernel) return 0;
  return (padded - kernel) / stride + 1;
}

std::size_t WindowGeometry::deconv_out(std::size_t in) const {
  if (in == 0) return 0;
  const std::size_t full = stride * (in - 1) + kernel;
  return full > 2 * pad ? full - 2 * pad : 0;
}

namespace detail {

void im2col(const Tensor& input, const WindowGeometry& g, std::size_t out_h, std::size_t out_w,
            std::vector<float>& cols) {
  const Shape s = input.shape();
  const std::size_t k = g.kernel;
  const std::size_t out_plane = out_h * out_w;
  const std::size_t ncols = s.n * out_plane;
  cols.assign(s.c * k * k * ncols, 0.0f);
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  const auto stride = static_cast<std::ptrdiff_t>(g.stride);
  const auto in_h = static_cast<std::ptrdiff_t>(s.h);
  const auto in_w = static_cast<std::ptrdiff_t>(s.w);

  for (std::size_t c = 0; c < s.c; ++c)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        float* row = cols.data() + ((c * k + ky) * k + kx) * ncols;
        const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
        // Output columns whose sample ox*stride + dx lands inside [0, in_w).
        std::ptrdiff_t x_lo = 0;
        while (x_lo < static_cast<std::ptrdiff_t>(out_w) && x_lo * stride + dx < 0) ++x_lo;
        std::ptrdiff_t x_hi = static_cast<std::ptrdiff_t>(out_w);
        while (x_hi > x_lo && (x_hi - 1) * stride + dx >= in_w) --x_hi;
        for (std::size_t b = 0; b < s.n; ++b) {
          const float* src = input.plane(b, c);
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy) * stride - pad + static_cast<std::ptrdiff_t>(ky);
            if (iy < 0 || iy >= in_h) continue;
            float* dst = row + b * out_plane + oy * out_w;
            const float* line = src + iy * in_w;
            if (stride == 1) {
              if (x_hi > x_lo)
                std::memcpy(dst + x_lo, line + x_lo + dx,
                            static_cast<std::size_t>(x_hi - x_lo) * sizeof(float));
            } else {
              for (std::ptrdiff_t ox = x_lo; ox < x_hi; ++ox) dst[ox] = line[ox * stride + dx];
            }
          }
        }
      }
}

void col2im(const std::vector<float>& cols, const WindowGeometry& g, std::size_t cols_h,
            std::size_t cols_w, Tensor& output) {
  const Shape s = output.shape();
  const std::size_t k = g.kernel;
  const std::size_t col_plane = cols_h * cols_w;
  const std::size_t ncols = s.n * col_plane;
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  const auto stride = static_cast<std::ptrdiff_t>(g.stride);
  const auto out_h = static_cast<std::ptrdiff_t>(s.h);
  const auto out_w = static_cast<std::ptrdiff_t>(s.w);

  for (std::size_t c = 0; c < s.c; ++c)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        const float* row = cols.data() + ((c * k + ky) * k + kx) * ncols;
        const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
        std::ptrdiff_t x_lo = 0;
        while (x_lo < static_cast<std::ptrdiff_t>(cols_w) && x_lo * stride + dx < 0) ++x_lo;
        std::ptrdiff_t x_hi = static_cast<std::ptrdiff_t>(cols_w);
        while (x_hi > x_lo && (x_hi - 1) * stride + dx >= out_w) --x_hi;
        for (std::size_t b = 0; b < s.n; ++b) {
          float* dst = output.plane(b, c);
          for (std::size_t oy = 0; oy < cols_h; ++oy) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy) * stride - pad + static_cast<std::ptrdiff_t>(ky);
            if (iy < 0 || iy >= out_h) continue;
            const float* src = row + b * col_plane + oy * cols_w;
            float* line = dst + iy * out_w;
            for (std::ptrdiff_t ox = x_lo; ox < x_hi; ++ox) line[ox * stride + dx] += src[ox];
          }
        }
      }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution

ConvLayer::ConvLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : ConvLayer(in_channels, out_channels, WindowGeometry{kernel, 1, kernel / 2}) {}

ConvLayer::ConvLayer(std::size_t in_channels, std::size_t out_channels, WindowGeometry g)
    : weights(Shape{out_channels, in_channels, g.kernel, g.kernel}),
      bias(out_channels, 0.0f),
      geometry(g) {
  if (g.kernel == 0 || g.stride == 0) throw ShapeError("conv: kernel and stride must be positive");
}

Shape ConvLayer::output_shape(const Shape& in) const {
  return Shape{in.n, out_channels(), geometry.conv_out(in.h), geometry.conv_out(in.w)};
}

Tensor ConvLayer::forward(const Tensor& input) const {
  check_channels(input.shape().c, in_channels(), "conv_forward");
  const Shape out_shape = output_shape(input.shape());
  const std::size_t ncols = out_shape.n * out_shape.plane();
  const std::size_t k_dim = in_channels() * geometry.kernel * geometry.kernel;

  std::vector<float> cols;
  detail::im2col(input, geometry, out_shape.h, out_shape.w, cols);
  std::vector<float> result(out_channels() * ncols);
  MatMap(result.data(), out_channels(), ncols).noalias() =
      ConstMatMap(weights.data(), out_channels(), k_dim) * ConstMatMap(cols.data(), k_dim, ncols);

  Tensor out = from_channel_major(result.data(), out_shape);
  add_bias(out, bias);
  return out;
}

ConvGrads ConvLayer::backward(const Tensor& input, const Tensor& grad_out) const {
  check_channels(input.shape().c, in_channels(), "conv_backward");
  const Shape out_shape = output_shape(input.shape());
  if (grad_out.shape() != out_shape) {
    throw ShapeError("conv_backward: grad_out " + grad_out.shape().str() + " expected " +
                     out_shape.str());
  }
  const std::size_t ncols = out_shape.n * out_shape.plane();
  const std::size_t k_dim = in_channels() * geometry.kernel * geometry.kernel;

  std::vector<float> cols;
  detail::im2col(input, geometry, out_shape.h, out_shape.w, cols);
  const std::vector<float> g = to_channel_major(grad_out);
  ConstMatMap gmat(g.data(), out_channels(), ncols);

  ConvGrads grads;
  grads.grad_w = Tensor(weights.shape());
  MatMap(grads.grad_w.data(), out_channels(), k_dim).noalias() =
      gmat * ConstMatMap(cols.data(), k_dim, ncols).transpose();
  grads.grad_b = channel_sums(grad_out);

  std::vector<float> grad_cols(k_dim * ncols);
  MatMap(grad_cols.data(), k_dim, ncols).noalias() =
      ConstMatMap(weights.data(), out_channels(), k_dim).transpose() * gmat;
  grads.grad_in = Tensor(input.shape());
  detail::col2im(grad_cols, geometry, out_shape.h, out_shape.w, grads.grad_in);
  return grads;
}

// ---------------------------------------------------------------------------
// Transposed convolution

DeconvLayer::DeconvLayer(std::size_t in_channels, std::size_t out_channels, std::size_t stride)
    : DeconvLayer(in_channels, out_channels, WindowGeometry{9, stride, 4}) {}

DeconvLayer::DeconvLayer(std::size_t in_channels, std::size_t out_channels, WindowGeometry g)
    : weights(Shape{in_channels, out_channels, g.kernel, g.kernel}),
      bias(out_channels, 0.0f),
      geometry(g) {
  if (g.kernel == 0 || g.stride == 0) {
    throw ShapeError("deconv: kernel and stride must be positive");
  }
}

Shape DeconvLayer::output_shape(const Shape& in) const {
  return Shape{in.n, out_channels(), geometry.deconv_out(in.h), geometry.deconv_out(in.w)};
}

Tensor DeconvLayer::forward(const Tensor& input) const {
  check_channels(input.shape().c, in_channels(), "deconv_forward");
  const Shape in_shape = input.shape();
  const Shape out_shape = output_shape(in_shape);
  const std::size_t ncols = in_shape.n * in_shape.plane();
  const std::size_t k_dim = out_channels() * geometry.kernel * geometry.kernel;

  const std::vector<float> x = to_channel_major(input);
  std::vector<float> cols(k_dim * ncols);
  MatMap(cols.data(), k_dim, ncols).noalias() =
      ConstMatMap(weights.data(), in_channels(), k_dim).transpose() *
      ConstMatMap(x.data(), in_channels(), ncols);

  Tensor out(out_shape);
  detail::col2im(cols, geometry, in_shape.h, in_shape.w, out);
  add_bias(out, bias);
  return out;
}

ConvGrads DeconvLayer::backward(const Tensor& input, const Tensor& grad_out) const {
  check_channels(input.shape().c, in_channels(), "deconv_backward");
  const Shape in_shape = input.shape();
  const Shape out_shape = output_shape(in_shape);
  if (grad_out.shape() != out_shape) {
    throw ShapeError("deconv_backward: grad_out " + grad_out.shape().str() + " expected " +
                     out_shape.str());
  }
  const std::size_t ncols = in_shape.n * in_shape.plane();
  const std::size_t k_dim = out_channels() * geometry.kernel * geometry.kernel;

  std::vector<float> gcols;
  detail::im2col(grad_out, geometry, in_shape.h, in_shape.w, gcols);
  ConstMatMap gmat(gcols.data(), k_dim, ncols);
  const std::vector<float> x = to_channel_major(input);

  ConvGrads grads;
  grads.grad_w = Tensor(weights.shape());
  MatMap(grads.grad_w.data(), in_channels(), k_dim).noalias() =
      ConstMatMap(x.data(), in_channels(), ncols) * gmat.transpose();
  grads.grad_b = channel_sums(grad_out);

  std::vector<float> gx(in_channels() * ncols);
  MatMap(gx.data(), in_channels(), ncols).noalias() =
      ConstMatMap(weights.data(), in_channels(), k_dim) * gmat;
  grads.grad_in = from_channel_major(gx.data(), in_shape);
  return grads;
}

// ---------------------------------------------------------------------------
// PReLU

PReLULayer::PReLULayer(std::size_t channels, float init_slope, bool is_learnable)
    : slopes(channels, is_learnable ? init_slope : 0.0f), learnable(is_learnable) {}

Tensor PReLULayer::forward(const Tensor& input) const {
  check_channels(input.shape().c, channels(), "prelu_forward");
  const Shape s = input.shape();
  Tensor out(s);
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t c = 0; c < s.c; ++c) {
      const float a = slopes[c];
      const float* x = input.plane(b, c);
      float* y = out.plane(b, c);
      for (std::size_t i = 0; i < s.plane(); ++i) y[i] = x[i] > 0.0f ? x[i] : a * x[i];
    }
  return out;
}

PReLUGrads PReLULayer::backward(const Tensor& input, const Tensor& grad_out) const {
  check_channels(input.shape().c, channels(), "prelu_backward");
  require_same_shape(input, grad_out, "prelu_backward");
  const Shape s = input.shape();
  PReLUGrads grads{Tensor(s), std::vector<float>(s.c, 0.0f)};
  for (std::size_t c = 0; c < s.c; ++c) {
    const float a = slopes[c];
    double ga = 0.0;
    for (std::size_t b = 0; b < s.n; ++b) {
      const float* x = input.plane(b, c);
      const float* g = grad_out.plane(b, c);
      float* gi = grads.grad_in.plane(b, c);
      // x == 0 takes the positive branch.
      for (std::size_t i = 0; i < s.plane(); ++i) {
        if (x[i] >= 0.0f) {
          gi[i] = g[i];
        } else {
          gi[i] = a * g[i];
          ga += static_cast<double>(g[i]) * x[i];
        }
      }
    }
    grads.grad_a[c] = learnable ? static_cast<float>(ga) : 0.0f;
  }
  return grads;
}

}  // namespace fsrcnn
