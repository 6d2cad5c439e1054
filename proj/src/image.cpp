#include "fsrcnn/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>

#include "fsrcnn/errors.hpp"

namespace fsrcnn {
namespace {

std::string lower_extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- PNG -------------------------------------------------------------------

RawImage read_png(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot decode PNG '" + path + "': " + img.message);
  }
  const bool gray = (img.format & PNG_FORMAT_FLAG_COLOR) == 0;
  img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  RawImage raw;
  raw.width = img.width;
  raw.height = img.height;
  raw.channels = gray ? 1 : 3;
  raw.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, raw.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG '" + path + "': " + img.message);
  }
  return raw;
}

void write_png(const RawImage& raw, const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(raw.width);
  img.height = static_cast<png_uint_32>(raw.height);
  img.format = raw.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, raw.pixels.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path + "': " + img.message);
  }
}

// --- PNM -------------------------------------------------------------------

RawImage read_pnm(const std::string& path) {
  const std::vector<unsigned char> bytes = read_bytes(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> std::size_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw IoError("malformed PNM header in '" + path + "'");
    }
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P') throw IoError("not a PNM file: '" + path + "'");
  const char type = static_cast<char>(bytes[1]);
  if (type != '2' && type != '3' && type != '5' && type != '6') {
    throw IoError("unsupported PNM type P" + std::string(1, type) + " in '" + path + "'");
  }
  pos = 2;
  RawImage raw;
  raw.width = number();
  raw.height = number();
  const std::size_t maxval = number();
  if (maxval == 0 || maxval > 65535) throw IoError("bad PNM maxval in '" + path + "'");
  raw.channels = (type == '2' || type == '5') ? 1 : 3;
  const std::size_t count = raw.width * raw.height * raw.channels;
  raw.pixels.resize(count);
  auto scale = [&](std::size_t v) {
    return static_cast<unsigned char>(std::lround(255.0 * static_cast<double>(v) / maxval));
  };
  if (type == '2' || type == '3') {
    for (std::size_t i = 0; i < count; ++i) raw.pixels[i] = scale(number());
  } else {
    ++pos;  // single whitespace after maxval
    const std::size_t bps = maxval > 255 ? 2 : 1;
    if (pos + count * bps > bytes.size()) throw IoError("truncated PNM data in '" + path + "'");
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t v = bytes[pos + i * bps];
      if (bps == 2) v = (v << 8) | bytes[pos + i * bps + 1];
      raw.pixels[i] = maxval == 255 ? static_cast<unsigned char>(v) : scale(v);
    }
  }
  return raw;
}

void write_pnm(const RawImage& raw, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << (raw.channels == 1 ? "P5" : "P6") << '\n'
      << raw.width << ' ' << raw.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raw.pixels.data()),
            static_cast<std::streamsize>(raw.pixels.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

// --- BMP -------------------------------------------------------------------

std::uint32_t le32(const std::vector<unsigned char>& b, std::size_t at) {
  return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}
std::uint16_t le16(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

RawImage read_bmp(const std::string& path) {
  const std::vector<unsigned char> b = read_bytes(path);
  if (b.size() < 54 || b[0] != 'B' || b[1] != 'M') throw IoError("not a BMP file: '" + path + "'");
  const std::uint32_t data_offset = le32(b, 10);
  const std::uint32_t header_size = le32(b, 14);
  const auto width = static_cast<std::int32_t>(le32(b, 18));
  const auto height = static_cast<std::int32_t>(le32(b, 22));
  const std::uint16_t bpp = le16(b, 28);
  const std::uint32_t compression = le32(b, 30);
  if (width <= 0 || height == 0) throw IoError("bad BMP dimensions in '" + path + "'");
  if (compression != 0 && !(compression == 3 && bpp == 32)) {
    throw IoError("compressed BMP not supported: '" + path + "'");
  }
  if (bpp != 8 && bpp != 24 && bpp != 32) {
    throw IoError("unsupported BMP bit depth " + std::to_string(bpp) + " in '" + path + "'");
  }
  const bool bottom_up = height > 0;
  RawImage raw;
  raw.width = static_cast<std::size_t>(width);
  raw.height = static_cast<std::size_t>(bottom_up ? height : -height);
  const std::size_t row_bytes = ((raw.width * bpp + 31) / 32) * 4;
  if (data_offset + row_bytes * raw.height > b.size()) {
    throw IoError("truncated BMP data in '" + path + "'");
  }

  std::vector<std::array<unsigned char, 3>> palette;
  bool palette_gray = true;
  if (bpp == 8) {
    std::uint32_t colors = le32(b, 46);
    if (colors == 0) colors = 256;
    const std::size_t at = 14 + header_size;
    if (at + 4 * colors > b.size()) throw IoError("truncated BMP palette in '" + path + "'");
    for (std::uint32_t i = 0; i < colors; ++i) {
      std::array<unsigned char, 3> rgb{b[at + 4 * i + 2], b[at + 4 * i + 1], b[at + 4 * i]};
      palette_gray = palette_gray && rgb[0] == rgb[1] && rgb[1] == rgb[2];
      palette.push_back(rgb);
    }
  }
  raw.channels = (bpp == 8 && palette_gray) ? 1 : 3;
  raw.pixels.resize(raw.width * raw.height * raw.channels);
  for (std::size_t y = 0; y < raw.height; ++y) {
    const std::size_t src_row = bottom_up ? raw.height - 1 - y : y;
    const unsigned char* row = b.data() + data_offset + src_row * row_bytes;
    unsigned char* dst = raw.pixels.data() + y * raw.width * raw.channels;
    for (std::size_t x = 0; x < raw.width; ++x) {
      if (bpp == 8) {
        const std::size_t idx = row[x];
        if (idx >= palette.size()) throw IoError("BMP palette index out of range in '" + path + "'");
        if (raw.channels == 1) {
          dst[x] = palette[idx][0];
        } else {
          std::copy(palette[idx].begin(), palette[idx].end(), dst + 3 * x);
        }
      } else {
        const unsigned char* px = row + x * (bpp / 8);
        dst[3 * x] = px[2];
        dst[3 * x + 1] = px[1];
        dst[3 * x + 2] = px[0];
      }
    }
  }
  return raw;
}

// Gray images get an 8-bit grayscale palette so they reload as one channel.
void write_bmp(const RawImage& raw, const std::string& path) {
  const bool gray = raw.channels == 1;
  const std::size_t bpp = gray ? 8 : 24;
  const std::size_t palette_bytes = gray ? 256 * 4 : 0;
  const std::size_t data_offset = 54 + palette_bytes;
  const std::size_t row_bytes = ((raw.width * bpp + 31) / 32) * 4;
  const std::size_t data_size = row_bytes * raw.height;
  std::vector<unsigned char> out(data_offset + data_size, 0);
  auto put32 = [&](std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out[at + i] = static_cast<unsigned char>(v >> (8 * i));
  };
  out[0] = 'B';
  out[1] = 'M';
  put32(2, static_cast<std::uint32_t>(out.size()));
  put32(10, static_cast<std::uint32_t>(data_offset));
  put32(14, 40);
  put32(18, static_cast<std::uint32_t>(raw.width));
  put32(22, static_cast<std::uint32_t>(raw.height));
  out[26] = 1;
  out[28] = static_cast<unsigned char>(bpp);
  put32(34, static_cast<std::uint32_t>(data_size));
  if (gray) {
    put32(46, 256);
    for (std::size_t i = 0; i < 256; ++i) {
      for (int c = 0; c < 3; ++c) out[54 + 4 * i + c] = static_cast<unsigned char>(i);
    }
  }
  for (std::size_t y = 0; y < raw.height; ++y) {
    unsigned char* row = out.data() + data_offset + (raw.height - 1 - y) * row_bytes;
    const unsigned char* src = raw.pixels.data() + y * raw.width * raw.channels;
    if (gray) {
      std::copy(src, src + raw.width, row);
      continue;
    }
    for (std::size_t x = 0; x < raw.width; ++x) {
      row[3 * x] = src[3 * x + 2];
      row[3 * x + 1] = src[3 * x + 1];
      row[3 * x + 2] = src[3 * x];
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing '" + path + "'");
}

// --- JPEG ------------------------------------------------------------------

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

RawImage read_jpeg(const std::string& path) {
  std::vector<unsigned char> bytes = read_bytes(path);
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = [](j_common_ptr c) {
    std::longjmp(reinterpret_cast<JpegErrorManager*>(c->err)->jump, 1);
  };
  RawImage raw;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("cannot decode JPEG '" + path + "'");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  raw.width = cinfo.output_width;
  raw.height = cinfo.output_height;
  raw.channels = static_cast<std::size_t>(cinfo.output_components);
  raw.pixels.resize(raw.width * raw.height * raw.channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raw.pixels.data() + cinfo.output_scanline * raw.width * raw.channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return raw;
}

// --- colour ----------------------------------------------------------------

// Rows give Y, Cb, Cr (times 255) from R, G, B in [0, 1].
const Eigen::Matrix3d& ycbcr_matrix() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 65.481, 128.553, 24.966,  //
                                    -37.797, -74.203, 112.0,                        //
                                    112.0, -93.786, -18.214)
                                       .finished();
  return m;
}
const Eigen::Vector3d kYCbCrOffset(16.0, 128.0, 128.0);

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

double round_to_byte_level(double v) {
  return std::clamp(std::round(v * 255.0), 0.0, 255.0) / 255.0;
}

}  // namespace

ImageY ImageY::gray(Tensor plane, std::string provenance) {
  ImageY img;
  img.y = std::move(plane);
  img.provenance = std::move(provenance);
  return img;
}

RawImage read_raw(const std::string& path) {
  const std::string ext = lower_extension(path);
  if (ext == "png") return read_png(path);
  if (ext == "ppm" || ext == "pgm" || ext == "pnm") return read_pnm(path);
  if (ext == "bmp") return read_bmp(path);
  if (ext == "jpg" || ext == "jpeg") {
    std::cerr << "warning: " << path << " is JPEG; lossy inputs are not ideal for SR\n";
    return read_jpeg(path);
  }
  throw IoError("unsupported image format '" + path + "'");
}

void write_raw(const RawImage& raw, const std::string& path) {
  const std::string ext = lower_extension(path);
  if (ext == "png") return write_png(raw, path);
  if (ext == "ppm" || ext == "pgm" || ext == "pnm") return write_pnm(raw, path);
  if (ext == "bmp") return write_bmp(raw, path);
  throw IoError("unsupported output format '" + path + "'");
}

ImageY from_raw(const RawImage& raw, std::string provenance) {
  if (raw.width == 0 || raw.height == 0) throw IoError("empty image " + provenance);
  const Shape shape{1, 1, raw.height, raw.width};
  ImageY img;
  img.provenance = std::move(provenance);
  img.y = Tensor(shape);
  const std::size_t n = raw.width * raw.height;
  if (raw.channels == 1) {
    for (std::size_t i = 0; i < n; ++i) img.y[i] = static_cast<float>(raw.pixels[i] / 255.0);
    return img;
  }
  img.cb = Tensor(shape);
  img.cr = Tensor(shape);
  const Eigen::Matrix3d& m = ycbcr_matrix();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d rgb(raw.pixels[3 * i] / 255.0, raw.pixels[3 * i + 1] / 255.0,
                              raw.pixels[3 * i + 2] / 255.0);
    const Eigen::Vector3d ycc = (m * rgb + kYCbCrOffset) / 255.0;
    img.y[i] = static_cast<float>(ycc[0]);
    (*img.cb)[i] = static_cast<float>(ycc[1]);
    (*img.cr)[i] = static_cast<float>(ycc[2]);
  }
  return img;
}

RawImage to_raw(const ImageY& image) {
  RawImage raw;
  raw.width = image.width();
  raw.height = image.height();
  const std::size_t n = raw.width * raw.height;
  if (!image.has_chroma()) {
    raw.channels = 1;
    raw.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i) raw.pixels[i] = to_byte(image.y[i]);
    return raw;
  }
  raw.channels = 3;
  raw.pixels.resize(3 * n);
  const Eigen::Matrix3d inv = ycbcr_matrix().inverse();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d ycc(image.y[i], (*image.cb)[i], (*image.cr)[i]);
    const Eigen::Vector3d rgb = inv * (ycc * 255.0 - kYCbCrOffset);
    for (int c = 0; c < 3; ++c) raw.pixels[3 * i + c] = to_byte(rgb[c]);
  }
  return raw;
}

ImageY load_image(const std::string& path) { return from_raw(read_raw(path), path); }

void save_image(const ImageY& image, const std::string& path) { write_raw(to_raw(image), path); }

void quantize(Tensor& plane) {
  for (float& v : plane.values()) v = static_cast<float>(round_to_byte_level(v));
}

void quantize(ImageY& image) {
  quantize(image.y);
  if (image.cb) quantize(*image.cb);
  if (image.cr) quantize(*image.cr);
}

// --- resampling ------------------------------------------------------------

namespace {

double cubic(double x) {
  const double ax = std::abs(x);
  const double ax2 = ax * ax;
  const double ax3 = ax2 * ax;
  if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
  if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
  return 0.0;
}

}  // namespace

ResampleTable resample_table(std::size_t in_len, std::size_t out_len, double scale) {
  const bool shrink = scale < 1.0;
  const double kernel_width = shrink ? 4.0 / scale : 4.0;
  const auto taps = static_cast<std::ptrdiff_t>(std::ceil(kernel_width)) + 2;
  const auto len = static_cast<std::ptrdiff_t>(in_len);
  ResampleTable table;
  table.indices.resize(out_len);
  table.weights.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    // One-based source coordinate of output pixel i + 1.
    const double u = static_cast<double>(i + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
    const auto left = static_cast<std::ptrdiff_t>(std::floor(u - kernel_width / 2.0));
    double total = 0.0;
    std::vector<double> w(static_cast<std::size_t>(taps));
    for (std::ptrdiff_t t = 0; t < taps; ++t) {
      const double dist = u - static_cast<double>(left + t);
      w[t] = shrink ? scale * cubic(scale * dist) : cubic(dist);
      total += w[t];
    }
    for (std::ptrdiff_t t = 0; t < taps; ++t) {
      if (w[t] == 0.0) continue;
      // Mirror into [1, len]: ... 2 1 | 1 2 ... len | len len-1 ...
      std::ptrdiff_t idx = left + t - 1;
      const std::ptrdiff_t period = 2 * len;
      idx = ((idx % period) + period) % period;
      if (idx >= len) idx = period - 1 - idx;
      table.indices[i].push_back(static_cast<std::size_t>(idx));
      table.weights[i].push_back(w[t] / total);
    }
  }
  return table;
}

namespace {

// Separable pass: height first, then width.
Tensor resample(const Tensor& plane, std::size_t out_h, std::size_t out_w, double scale_y,
                double scale_x, ResizeRounding rounding) {
  const Shape s = plane.shape();
  const bool round8 = rounding == ResizeRounding::PerPass8Bit;
  const ResampleTable ty = resample_table(s.h, out_h, scale_y);
  std::vector<double> mid(out_h * s.w, 0.0);
  for (std::size_t y = 0; y < out_h; ++y) {
    double* row = mid.data() + y * s.w;
    for (std::size_t t = 0; t < ty.indices[y].size(); ++t) {
      const float* src = plane.data() + ty.indices[y][t] * s.w;
      const double w = ty.weights[y][t];
      for (std::size_t x = 0; x < s.w; ++x) row[x] += w * src[x];
    }
    if (round8)
      for (std::size_t x = 0; x < s.w; ++x) row[x] = round_to_byte_level(row[x]);
  }

  const ResampleTable tx = resample_table(s.w, out_w, scale_x);
  Tensor out(Shape{1, 1, out_h, out_w});
  for (std::size_t y = 0; y < out_h; ++y) {
    const double* row = mid.data() + y * s.w;
    float* dst = out.data() + y * out_w;
    for (std::size_t x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < tx.indices[x].size(); ++t) {
        acc += tx.weights[x][t] * row[tx.indices[x][t]];
      }
      dst[x] = static_cast<float>(round8 ? round_to_byte_level(acc) : acc);
    }
  }
  return out;
}

void check_plane(const Tensor& plane, std::size_t out_h, std::size_t out_w) {
  const Shape s = plane.shape();
  if (s.n != 1 || s.c != 1) throw ShapeError("bicubic_resize expects a single plane");
  if (out_h == 0 || out_w == 0 || s.h == 0 || s.w == 0) {
    throw DomainError("bicubic_resize: degenerate size " + std::to_string(out_h) + "x" +
                      std::to_string(out_w));
  }
}

}  // namespace

Tensor bicubic_resize(const Tensor& plane, std::size_t out_h, std::size_t out_w,
                      ResizeRounding rounding) {
  check_plane(plane, out_h, out_w);
  const Shape s = plane.shape();
  return resample(plane, out_h, out_w, static_cast<double>(out_h) / static_cast<double>(s.h),
                  static_cast<double>(out_w) / static_cast<double>(s.w), rounding);
}

Tensor bicubic_resize(const Tensor& plane, Ratio factor, ResizeRounding rounding) {
  if (factor.num == 0 || factor.den == 0) throw DomainError("bicubic_resize: factor must be > 0");
  const std::size_t out_h = factor.apply(plane.shape().h);
  const std::size_t out_w = factor.apply(plane.shape().w);
  check_plane(plane, out_h, out_w);
  // The kernel follows the requested factor, not the rounded size ratio.
  return resample(plane, out_h, out_w, factor.value(), factor.value(), rounding);
}

ImageY bicubic_resize(const ImageY& image, Ratio factor, ResizeRounding rounding) {
  ImageY out;
  out.y = bicubic_resize(image.y, factor, rounding);
  if (image.cb) out.cb = bicubic_resize(*image.cb, factor, rounding);
  if (image.cr) out.cr = bicubic_resize(*image.cr, factor, rounding);
  out.provenance = image.provenance + "|bicubic(" + std::to_string(factor.num) + "/" +
                   std::to_string(factor.den) + ")";
  return out;
}

// --- geometry --------------------------------------------------------------

Tensor rotate90(const Tensor& plane, int quarter_turns) {
  const Shape s = plane.shape();
  const int turns = ((quarter_turns % 4) + 4) % 4;
  if (turns == 0) return plane;
  const bool swap = turns % 2 == 1;
  Tensor out(Shape{1, 1, swap ? s.w : s.h, swap ? s.h : s.w});
  const std::size_t ow = out.shape().w;
  for (std::size_t y = 0; y < s.h; ++y)
    for (std::size_t x = 0; x < s.w; ++x) {
      std::size_t ny = 0, nx = 0;
      switch (turns) {
        case 1: ny = x; nx = s.h - 1 - y; break;
        case 2: ny = s.h - 1 - y; nx = s.w - 1 - x; break;
        case 3: ny = s.w - 1 - x; nx = y; break;
      }
      out[ny * ow + nx] = plane[y * s.w + x];
    }
  return out;
}

Tensor crop(const Tensor& plane, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  const Shape s = plane.shape();
  if (top + h > s.h || left + w > s.w) {
    throw ShapeError("crop " + std::to_string(h) + "x" + std::to_string(w) + " at (" +
                     std::to_string(top) + "," + std::to_string(left) + ") exceeds " + s.str());
  }
  Tensor out(Shape{s.n, s.c, h, w});
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = 0; y < h; ++y)
        std::memcpy(out.plane(b, c) + y * w, plane.plane(b, c) + (top + y) * s.w + left,
                    w * sizeof(float));
  return out;
}

Tensor modcrop(const Tensor& plane, std::size_t n) {
  const Shape s = plane.shape();
  return crop(plane, 0, 0, s.h - s.h % n, s.w - s.w % n);
}

ImageY modcrop(const ImageY& image, std::size_t n) {
  ImageY out = image;
  out.y = modcrop(image.y, n);
  if (out.cb) out.cb = modcrop(*image.cb, n);
  if (out.cr) out.cr = modcrop(*image.cr, n);
  return out;
}

Tensor pad_replicate(const Tensor& plane, std::size_t extra_bottom, std::size_t extra_right) {
  const Shape s = plane.shape();
  if (s.h == 0 || s.w == 0) throw ShapeError("pad_replicate on empty plane");
  const std::size_t h = s.h + extra_bottom;
  const std::size_t w = s.w + extra_right;
  Tensor out(Shape{s.n, s.c, h, w});
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = 0; y < h; ++y) {
        const float* src = plane.plane(b, c) + std::min(y, s.h - 1) * s.w;
        float* dst = out.plane(b, c) + y * w;
        for (std::size_t x = 0; x < w; ++x) dst[x] = src[std::min(x, s.w - 1)];
      }
  return out;
}

void clamp01(Tensor& plane) {
  for (float& v : plane.values()) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace fsrcnn
