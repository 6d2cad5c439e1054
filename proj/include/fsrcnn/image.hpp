#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fsrcnn/tensor.hpp"

namespace fsrcnn {

// Luminance image in [0, 1] with optional chroma planes. Every plane is a
// (1, 1, h, w) tensor.
struct ImageY {
  Tensor y;
  std::optional<Tensor> cb;
  std::optional<Tensor> cr;
  std::string provenance;

  std::size_t height() const { return y.shape().h; }
  std::size_t width() const { return y.shape().w; }
  bool has_chroma() const { return cb.has_value() && cr.has_value(); }

  static ImageY gray(Tensor plane, std::string provenance = {});
};

// Interleaved 8-bit pixels as decoded from disk.
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 (gray) or 3 (RGB)
  std::vector<unsigned char> pixels;
};

RawImage read_raw(const std::string& path);
void write_raw(const RawImage& image, const std::string& path);

// RGB -> YCbCr with the BT.601 studio-swing matrix (Y in [16, 235] / 255).
ImageY from_raw(const RawImage& raw, std::string provenance = {});
RawImage to_raw(const ImageY& image);

// Reads PNG, PPM/PGM (binary or ASCII), BMP, or JPEG (with a warning on stderr).
ImageY load_image(const std::string& path);
// Writes by extension: .png, .ppm, .pgm, .bmp.
void save_image(const ImageY& image, const std::string& path);

// Rounds every plane to the nearest 1/255 level, as 8-bit storage does.
void quantize(ImageY& image);
void quantize(Tensor& plane);

// Scale factor num/den.
struct Ratio {
  std::size_t num = 1;
  std::size_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  // ceil(extent * num / den)
  std::size_t apply(std::size_t extent) const { return (extent * num + den - 1) / den; }
};

enum class ResizeRounding { None, PerPass8Bit };

// Cubic convolution (Keys, a = -0.5) resampling. When shrinking, the kernel is
// stretched by 1/factor to antialias. Samples outside the plane are mirrored.
Tensor bicubic_resize(const Tensor& plane, Ratio factor,
                      ResizeRounding rounding = ResizeRounding::None);
Tensor bicubic_resize(const Tensor& plane, std::size_t out_h, std::size_t out_w,
                      ResizeRounding rounding = ResizeRounding::None);
ImageY bicubic_resize(const ImageY& image, Ratio factor,
                      ResizeRounding rounding = ResizeRounding::None);

// Resampling weights along one axis: output i draws from `indices[i][t]` with
// `weights[i][t]`.
struct ResampleTable {
  std::vector<std::vector<std::size_t>> indices;
  std::vector<std::vector<double>> weights;
};
ResampleTable resample_table(std::size_t in_len, std::size_t out_len, double scale);

// Clockwise rotation by quarter turns.
Tensor rotate90(const Tensor& plane, int quarter_turns);

// Top-left crop.
Tensor crop(const Tensor& plane, std::size_t top, std::size_t left, std::size_t h, std::size_t w);
// Crops to sides divisible by `n`, anchored at the top-left.
Tensor modcrop(const Tensor& plane, std::size_t n);
ImageY modcrop(const ImageY& image, std::size_t n);
// Replicates the last row and column `extra` times.
Tensor pad_replicate(const Tensor& plane, std::size_t extra_bottom, std::size_t extra_right);

void clamp01(Tensor& plane);

}  // namespace fsrcnn
