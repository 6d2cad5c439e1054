#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fsrcnn/dataset.hpp"
#include "fsrcnn/errors.hpp"
#include "test_support.hpp"

using namespace fsrcnn;
using namespace fsrcnn::testing;
namespace fs = std::filesystem;

namespace {

// Every pixel holds a unique value, so a crop's top-left identifies its origin.
Tensor coordinate_plane(std::size_t h, std::size_t w) {
  Tensor t({1, 1, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) t(0, 0, y, x) = static_cast<float>(y * w + x) / (h * w);
  return t;
}

}  // namespace

TEST_CASE("sub-image sizes") {
  CHECK(lr_patch_size(2) == 10);
  CHECK(hr_patch_size(2) == 19);
  CHECK(lr_patch_size(3) == 7);
  CHECK(hr_patch_size(3) == 19);
  CHECK(lr_patch_size(4) == 6);
  CHECK(hr_patch_size(4) == 21);
  CHECK_THROWS_AS(lr_patch_size(5), SpecError);
}

TEST_CASE("augmentation grid") {
  const auto grid = augmentation_grid();
  CHECK(grid.size() == 20);
  std::set<std::pair<std::size_t, int>> seen;
  for (const Augmentation& a : grid) {
    CHECK(a.scale.den == 10);
    seen.insert({a.scale.num, a.quarter_turns});
  }
  CHECK(seen.size() == 20);
  CHECK(seen.count({10, 0}) == 1);

  const TrainingSet set = make_training_set({ImageY::gray(synthetic_plane(60, 66, 1))}, 3, 0, true);
  CHECK(set.variants == 20);
  CHECK(set.warnings.empty());
  std::set<std::string> transforms;
  for (const ManifestEntry& e : set.manifest) transforms.insert(e.transform);
  CHECK(transforms.size() == 20);
}

TEST_CASE("every pair has the tabulated geometry") {
  const std::vector<ImageY> images{ImageY::gray(synthetic_plane(64, 50, 2)),
                                   ImageY::gray(synthetic_plane(45, 71, 3))};
  for (std::size_t n : {2, 3, 4}) {
    const TrainingSet set = make_training_set(images, n, 0, true);
    REQUIRE_FALSE(set.pairs.empty());
    CHECK(set.pairs.size() == set.manifest.size());
    for (const SamplePair& p : set.pairs) {
      CHECK(p.lr.shape() == Shape{1, 1, lr_patch_size(n), lr_patch_size(n)});
      CHECK(p.hr.shape() == Shape{1, 1, hr_patch_size(n), hr_patch_size(n)});
      CHECK(p.scale == n);
    }
  }
}

TEST_CASE("single tile") {
  TrainingSet set;
  tile_pairs(Tensor({1, 1, 21, 21}), Tensor({1, 1, 7, 7}), 3, 7, "t", "none", set);
  CHECK(set.pairs.size() == 1);
  CHECK(set.variants == 1);
  // 21x21 ground truth downscales to exactly 7x7 at x3.
  CHECK(make_training_set({ImageY::gray(synthetic_plane(21, 21, 4))}, 3, 7).pairs.size() == 1);
}

TEST_CASE("tiling coverage and stride") {
  const ImageY img = ImageY::gray(synthetic_plane(62, 47, 5));
  for (std::size_t n : {2, 3, 4}) {
    const std::size_t f = lr_patch_size(n);
    const std::size_t lh = (62 / n), lw = (47 / n);
    const TrainingSet set = make_training_set({img}, n);
    CHECK(set.pairs.size() == (lh / f) * (lw / f));
    std::vector<int> hits(lh * lw, 0);
    for (const ManifestEntry& e : set.manifest) {
      CHECK(e.lr_y % f == 0);
      CHECK(e.lr_x % f == 0);
      CHECK(e.lr_y + f <= lh);
      CHECK(e.lr_x + f <= lw);
      for (std::size_t y = 0; y < f; ++y)
        for (std::size_t x = 0; x < f; ++x) ++hits[(e.lr_y + y) * lw + e.lr_x + x];
    }
    for (int h : hits) CHECK(h <= 1);

    const TrainingSet dense = make_training_set({img}, n, 1);
    CHECK(dense.pairs.size() == (lh - f + 1) * (lw - f + 1));
  }
}

TEST_CASE("pair alignment against a coordinate ramp") {
  for (std::size_t n : {2, 3, 4}) {
    const Tensor gt = coordinate_plane(12 * n + 1, 9 * n + 2);  // modcrop trims the remainder
    const TrainingSet set = make_training_set({ImageY::gray(gt)}, n, 3);
    const Tensor lr = bicubic_resize(modcrop(gt, n), Ratio{1, n});
    REQUIRE_FALSE(set.pairs.empty());
    for (std::size_t i = 0; i < set.pairs.size(); ++i) {
      const ManifestEntry& e = set.manifest[i];
      const SamplePair& p = set.pairs[i];
      CHECK(p.hr(0, 0, 0, 0) == gt(0, 0, n * e.lr_y, n * e.lr_x));
      const std::size_t last = hr_patch_size(n) - 1;
      CHECK(p.hr(0, 0, last, last) == gt(0, 0, n * e.lr_y + last, n * e.lr_x + last));
      CHECK(p.lr == crop(lr, e.lr_y, e.lr_x, lr_patch_size(n), lr_patch_size(n)));
    }
  }
}

TEST_CASE("small images are skipped with a warning") {
  const TrainingSet set = make_training_set(
      {ImageY::gray(synthetic_plane(12, 12, 6), "tiny"), ImageY::gray(synthetic_plane(30, 30, 7))},
      3);
  CHECK(set.warnings.size() == 1);
  CHECK(set.warnings[0].find("tiny") != std::string::npos);
  CHECK(set.variants == 1);
  CHECK(set.pairs.size() == 1);  // 10x10 LR holds one 7x7 tile

  // Under augmentation the smaller scales of a marginal image drop out.
  const TrainingSet aug = make_training_set({ImageY::gray(synthetic_plane(24, 24, 8))}, 3, 0, true);
  CHECK(aug.variants < 20);
  CHECK(aug.variants + aug.warnings.size() == 20);

  CHECK_THROWS_AS(make_training_set({}, 3), DomainError);
  CHECK_THROWS_AS(make_training_set({ImageY::gray(synthetic_plane(30, 30, 7))}, 5), SpecError);
}

TEST_CASE("dataset is independent of worker count") {
  std::vector<ImageY> images;
  for (std::uint64_t s = 0; s < 5; ++s) images.push_back(ImageY::gray(synthetic_plane(40 + s, 44, s)));
  const TrainingSet one = make_training_set(images, 3, 0, true, 1);
  const TrainingSet four = make_training_set(images, 3, 0, true, 4);
  REQUIRE(one.pairs.size() == four.pairs.size());
  for (std::size_t i = 0; i < one.pairs.size(); ++i) {
    CHECK(one.pairs[i].lr == four.pairs[i].lr);
    CHECK(one.pairs[i].hr == four.pairs[i].hr);
    CHECK(one.manifest[i].transform == four.manifest[i].transform);
  }
  CHECK(one.warnings == four.warnings);
}

TEST_CASE("manifest and batches") {
  const TrainingSet set =
      make_training_set({ImageY::gray(synthetic_plane(42, 42, 9), "img")}, 3);
  const fs::path path = fs::temp_directory_path() / "fsrcnn_manifest.tsv";
  write_manifest(set, path.string());
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  std::getline(in, line);
  CHECK(line.rfind("#", 0) == 0);
  while (std::getline(in, line)) ++lines;
  CHECK(lines == set.pairs.size());

  Tensor lr, hr;
  const std::vector<std::size_t> order{3, 1};
  stack_batch(set.pairs, order, 0, 2, lr, hr);
  CHECK(lr.shape() == Shape{2, 1, 7, 7});
  CHECK(hr.shape() == Shape{2, 1, 19, 19});
  CHECK(lr(1, 0, 2, 3) == set.pairs[1].lr(0, 0, 2, 3));
  CHECK(hr(0, 0, 18, 0) == set.pairs[3].hr(0, 0, 18, 0));
  CHECK_THROWS_AS(stack_batch(set.pairs, order, 1, 2, lr, hr), ShapeError);
}

TEST_CASE("full-size inference") {
  const Model m = build(ArchitectureSpec::fsrcnn(8, 4, 1, 3), {}, 1);
  const ImageY gray = ImageY::gray(synthetic_plane(60, 80, 10));
  const ImageY out = upscale_full(m, gray);
  CHECK(out.y.shape() == Shape{1, 1, 180, 240});
  CHECK_FALSE(out.has_chroma());
  for (float v : out.y.values()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }

  ImageY colour = gray;
  colour.cb = Tensor::filled(gray.y.shape(), 0.4f);
  colour.cr = Tensor::filled(gray.y.shape(), 0.6f);
  const ImageY c = upscale_full(m, colour);
  REQUIRE(c.has_chroma());
  CHECK(c.cb->shape() == Shape{1, 1, 180, 240});
  CHECK((*c.cr)(0, 0, 100, 100) == doctest::Approx(0.6f));

  // Away from the padded border the result equals the bare network output.
  const Tensor lr = synthetic_plane(20, 20, 11);
  const Tensor full = upscale_plane(m, lr);
  Tensor raw = m.forward(lr);
  clamp01(raw);
  for (std::size_t y = 0; y < 3 * 12; ++y)
    for (std::size_t x = 0; x < 3 * 12; ++x) CHECK(full(0, 0, y, x) == raw(0, 0, y, x));

  const Model srcnn = build(ArchitectureSpec::srcnn_915(2), {}, 1);
  CHECK(upscale_plane(srcnn, lr).shape() == Shape{1, 1, 40, 40});
}

TEST_CASE("directory loading is sorted and filtered") {
  const fs::path dir = fs::temp_directory_path() / "fsrcnn_dir";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_image(ImageY::gray(Tensor::filled({1, 1, 4, 4}, 0.2f)), (dir / "b.png").string());
  save_image(ImageY::gray(Tensor::filled({1, 1, 3, 3}, 0.8f)), (dir / "a.pgm").string());
  std::ofstream(dir / "notes.txt") << "x";
  const auto images = load_directory(dir.string());
  REQUIRE(images.size() == 2);
  CHECK(images[0].height() == 3);
  CHECK(images[1].height() == 4);
  CHECK(is_image_path("X.JPG"));
  CHECK_FALSE(is_image_path("x.txt"));
  CHECK_THROWS_AS(load_directory((dir / "nope").string()), IoError);
}
