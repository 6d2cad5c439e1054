#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fsrcnn/image.hpp"
#include "fsrcnn/model.hpp"
#include "fsrcnn/tensor.hpp"

namespace fsrcnn {

// LR sub-image side for each scale factor: x2 -> 10, x3 -> 7, x4 -> 6.
std::size_t lr_patch_size(std::size_t scale);
// HR target side: scale * f_sub - scale + 1 (19, 19, 21).
std::size_t hr_patch_size(std::size_t scale);

struct SamplePair {
  Tensor lr;  // (1, 1, f_sub, f_sub)
  Tensor hr;  // (1, 1, n*f_sub - n + 1, same)
  std::size_t scale = 0;
};

// One line of the dataset index.
struct ManifestEntry {
  std::string source;
  std::string transform;  // e.g. "scale=9/10,rot=90"
  std::size_t lr_y = 0;
  std::size_t lr_x = 0;
};

struct TrainingSet {
  std::vector<SamplePair> pairs;
  std::vector<ManifestEntry> manifest;  // parallel to pairs
  std::vector<std::string> warnings;
  std::size_t variants = 0;  // image variants that entered tiling
};

struct Augmentation {
  Ratio scale;
  int quarter_turns = 0;
};

// The 5 x 4 grid {1, 0.9, 0.8, 0.7, 0.6} x {0, 90, 180, 270} degrees.
std::vector<Augmentation> augmentation_grid();

// Tiles LR/HR pairs out of the luminance planes of `images`. Stride 0 selects
// f_sub (non-overlapping). Work is split per image over `threads`; output order
// is (image, variant, tile) regardless of thread count.
TrainingSet make_training_set(const std::vector<ImageY>& images, std::size_t scale,
                              std::size_t stride = 0, bool augment = false,
                              std::size_t threads = 1);

// Tiles one ground-truth plane (already modcropped to a multiple of scale).
void tile_pairs(const Tensor& hr_plane, const Tensor& lr_plane, std::size_t scale,
                std::size_t stride, const std::string& source, const std::string& transform,
                TrainingSet& out);

void write_manifest(const TrainingSet& set, const std::string& path);

// Stacks pairs [first, first+count) of `order` into (count, 1, h, w) batches.
void stack_batch(const std::vector<SamplePair>& pairs, const std::vector<std::size_t>& order,
                 std::size_t first, std::size_t count, Tensor& lr, Tensor& hr);

// Super-resolves the luminance to exactly (n*h) x (n*w); chroma is bicubic
// upscaled. Output is clamped to [0, 1].
ImageY upscale_full(const Model& model, const ImageY& image);
// Luminance-only variant.
Tensor upscale_plane(const Model& model, const Tensor& lr_plane);

// Images with these extensions are accepted by load_directory.
bool is_image_path(const std::string& path);
// Loads every supported image in a directory, sorted by file name.
std::vector<ImageY> load_directory(const std::string& dir);

}  // namespace fsrcnn
