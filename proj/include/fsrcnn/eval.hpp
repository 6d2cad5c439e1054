#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "fsrcnn/dataset.hpp"
#include "fsrcnn/image.hpp"
#include "fsrcnn/model.hpp"

namespace fsrcnn {

inline constexpr double kIdenticalPsnr = std::numeric_limits<double>::infinity();

// 10 log10(1 / MSE) over the region `shave` pixels inside each border.
// Identical inputs give kIdenticalPsnr.
double psnr(const Tensor& reference, const Tensor& candidate, std::size_t shave);
double psnr(const ImageY& reference, const ImageY& candidate, std::size_t shave);

// Maps an LR luminance plane to an (n*h) x (n*w) estimate.
using Upscaler = std::function<Tensor(const Tensor&)>;

Upscaler bicubic_upscaler(std::size_t scale);
Upscaler model_upscaler(const Model& model);

struct EvalResult {
  std::vector<std::string> names;
  std::vector<double> psnr;
  double mean_psnr = 0.0;
  std::size_t shave = 0;
  std::size_t scale = 0;
};

// Ground truth preparation shared by evaluation and validation: 8-bit
// luminance, modcropped to a multiple of n, and its 1/n bicubic LR plane.
struct TestPair {
  std::string name;
  Tensor lr;
  Tensor hr;
};
TestPair make_test_pair(const ImageY& ground_truth, std::size_t scale);
std::vector<TestPair> make_test_pairs(const std::vector<ImageY>& images, std::size_t scale);

// PSNR with shave = n of every pair; SR output is rounded to 8-bit levels.
EvalResult evaluate(const Upscaler& upscaler, const std::vector<TestPair>& pairs,
                    std::size_t scale, std::size_t threads = 1);
EvalResult evaluate(const Upscaler& upscaler, const std::string& test_dir, std::size_t scale,
                    std::size_t threads = 1);

void write_eval_csv(const EvalResult& result, std::ostream& out);
void print_eval_table(const EvalResult& result, std::ostream& out);

struct BenchResult {
  std::size_t lr_h = 0;
  std::size_t lr_w = 0;
  std::vector<double> seconds;  // warm runs only
  double median_seconds = 0.0;
  double fps = 0.0;
  double macs = 0.0;
  double gmacs_per_second = 0.0;
  std::size_t threads = 1;
};

// Times `repeats` warm forward passes on a seeded random LR plane; one extra
// warm-up pass runs first and is discarded.
BenchResult bench(const Model& model, std::size_t lr_h, std::size_t lr_w, std::size_t repeats);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fsrcnn
