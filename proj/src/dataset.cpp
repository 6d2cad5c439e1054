#include "fsrcnn/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include "fsrcnn/errors.hpp"

namespace fsrcnn {

std::size_t lr_patch_size(std::size_t scale) {
  switch (scale) {
    case 2: return 10;
    case 3: return 7;
    case 4: return 6;
  }
  throw SpecError("no sub-image size for scale " + std::to_string(scale));
}

std::size_t hr_patch_size(std::size_t scale) {
  return scale * lr_patch_size(scale) - scale + 1;
}

std::vector<Augmentation> augmentation_grid() {
  std::vector<Augmentation> grid;
  for (std::size_t tenths : {10, 9, 8, 7, 6})
    for (int turns = 0; turns < 4; ++turns) grid.push_back({Ratio{tenths, 10}, turns});
  return grid;
}

void tile_pairs(const Tensor& hr_plane, const Tensor& lr_plane, std::size_t scale,
                std::size_t stride, const std::string& source, const std::string& transform,
                TrainingSet& out) {
  const std::size_t f = lr_patch_size(scale);
  const std::size_t hr_f = hr_patch_size(scale);
  const Shape lr = lr_plane.shape();
  if (stride == 0) stride = f;
  if (lr.h < f || lr.w < f) {
    out.warnings.push_back(source + " [" + transform + "]: LR plane " + std::to_string(lr.h) +
                           "x" + std::to_string(lr.w) + " smaller than sub-image " +
                           std::to_string(f) + ", skipped");
    return;
  }
  ++out.variants;
  for (std::size_t y = 0; y + f <= lr.h; y += stride)
    for (std::size_t x = 0; x + f <= lr.w; x += stride) {
      SamplePair pair;
      pair.lr = crop(lr_plane, y, x, f, f);
      pair.hr = crop(hr_plane, scale * y, scale * x, hr_f, hr_f);
      pair.scale = scale;
      out.pairs.push_back(std::move(pair));
      out.manifest.push_back({source, transform, y, x});
    }
}

namespace {

TrainingSet tile_image(const ImageY& image, std::size_t scale, std::size_t stride, bool augment) {
  TrainingSet out;
  const std::vector<Augmentation> variants =
      augment ? augmentation_grid() : std::vector<Augmentation>{{Ratio{1, 1}, 0}};
  for (const Augmentation& a : variants) {
    const std::string transform = "scale=" + std::to_string(a.scale.num) + "/" +
                                  std::to_string(a.scale.den) +
                                  ",rot=" + std::to_string(90 * a.quarter_turns);
    Tensor plane = image.y;
    if (a.scale.num != a.scale.den) plane = bicubic_resize(plane, a.scale);
    plane = rotate90(plane, a.quarter_turns);
    plane = modcrop(plane, scale);
    const Shape s = plane.shape();
    if (s.h == 0 || s.w == 0) {
      out.warnings.push_back(image.provenance + " [" + transform + "]: too small, skipped");
      continue;
    }
    const Tensor lr = bicubic_resize(plane, Ratio{1, scale});
    tile_pairs(plane, lr, scale, stride, image.provenance, transform, out);
  }
  return out;
}

}  // namespace

TrainingSet make_training_set(const std::vector<ImageY>& images, std::size_t scale,
                              std::size_t stride, bool augment, std::size_t threads) {
  if (images.empty()) throw DomainError("make_training_set: no images");
  lr_patch_size(scale);  // validates scale
  std::vector<TrainingSet> per_image(images.size());
  threads = std::clamp<std::size_t>(threads, 1, images.size());
  if (threads == 1) {
    for (std::size_t i = 0; i < images.size(); ++i) {
      per_image[i] = tile_image(images[i], scale, stride, augment);
    }
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < images.size(); i += threads) {
          per_image[i] = tile_image(images[i], scale, stride, augment);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  TrainingSet out;
  for (TrainingSet& part : per_image) {
    out.variants += part.variants;
    std::move(part.pairs.begin(), part.pairs.end(), std::back_inserter(out.pairs));
    std::move(part.manifest.begin(), part.manifest.end(), std::back_inserter(out.manifest));
    std::move(part.warnings.begin(), part.warnings.end(), std::back_inserter(out.warnings));
  }
  return out;
}

void write_manifest(const TrainingSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# index\tsource\ttransform\tlr_y\tlr_x\n";
  for (std::size_t i = 0; i < set.manifest.size(); ++i) {
    const ManifestEntry& e = set.manifest[i];
    out << i << '\t' << e.source << '\t' << e.transform << '\t' << e.lr_y << '\t' << e.lr_x
        << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void stack_batch(const std::vector<SamplePair>& pairs, const std::vector<std::size_t>& order,
                 std::size_t first, std::size_t count, Tensor& lr, Tensor& hr) {
  if (count == 0 || first + count > order.size()) throw ShapeError("stack_batch: bad range");
  const Shape ls = pairs[order[first]].lr.shape();
  const Shape hs = pairs[order[first]].hr.shape();
  const Shape lr_shape{count, 1, ls.h, ls.w};
  const Shape hr_shape{count, 1, hs.h, hs.w};
  if (lr.shape() != lr_shape) lr = Tensor(lr_shape);
  if (hr.shape() != hr_shape) hr = Tensor(hr_shape);
  for (std::size_t i = 0; i < count; ++i) {
    const SamplePair& p = pairs[order[first + i]];
    if (p.lr.shape().plane() != ls.plane() || p.hr.shape().plane() != hs.plane()) {
      throw ShapeError("stack_batch: pairs of mixed geometry");
    }
    std::memcpy(lr.plane(i, 0), p.lr.data(), ls.plane() * sizeof(float));
    std::memcpy(hr.plane(i, 0), p.hr.data(), hs.plane() * sizeof(float));
  }
}

Tensor upscale_plane(const Model& model, const Tensor& lr_plane) {
  const Shape s = lr_plane.shape();
  if (s.c != 1) throw ShapeError("upscale expects a single luminance channel");
  const std::size_t n = model.scale();
  Tensor out;
  if (model.spec().upsamples()) {
    // One replicated row/column yields n*h + 1 rows; keep the top-left n*h.
    const Tensor padded = pad_replicate(lr_plane, 1, 1);
    const Tensor full = model.forward(padded);
    out = crop(full, 0, 0, n * s.h, n * s.w);
  } else {
    out = model.forward(bicubic_resize(lr_plane, Ratio{n, 1}));
  }
  clamp01(out);
  return out;
}

ImageY upscale_full(const Model& model, const ImageY& image) {
  const std::size_t n = model.scale();
  ImageY out;
  out.y = upscale_plane(model, image.y);
  if (image.cb) {
    out.cb = bicubic_resize(*image.cb, Ratio{n, 1});
    clamp01(*out.cb);
  }
  if (image.cr) {
    out.cr = bicubic_resize(*image.cr, Ratio{n, 1});
    clamp01(*out.cr);
  }
  out.provenance = image.provenance + "|" + model.spec().name() + "x" + std::to_string(n);
  return out;
}

bool is_image_path(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".bmp" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm" ||
         ext == ".jpg" || ext == ".jpeg";
}

std::vector<ImageY> load_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: '" + dir + "'");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_path(entry.path().string())) {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<ImageY> images;
  images.reserve(paths.size());
  for (const auto& p : paths) images.push_back(load_image(p));
  return images;
}

}  // namespace fsrcnn
