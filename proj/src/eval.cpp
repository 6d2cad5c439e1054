#include "fsrcnn/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "fsrcnn/errors.hpp"

namespace fsrcnn {

double psnr(const Tensor& reference, const Tensor& candidate, std::size_t shave) {
  require_same_shape(reference, candidate, "psnr");
  const Shape s = reference.shape();
  if (2 * shave >= s.h || 2 * shave >= s.w) {
    throw ShapeError("psnr: shave " + std::to_string(shave) + " leaves no pixels of " + s.str());
  }
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = shave; y < s.h - shave; ++y)
        for (std::size_t x = shave; x < s.w - shave; ++x) {
          const double d = static_cast<double>(reference(b, c, y, x)) - candidate(b, c, y, x);
          acc += d * d;
          ++count;
        }
  if (acc == 0.0) return kIdenticalPsnr;
  return 10.0 * std::log10(static_cast<double>(count) / acc);
}

double psnr(const ImageY& reference, const ImageY& candidate, std::size_t shave) {
  return psnr(reference.y, candidate.y, shave);
}

Upscaler bicubic_upscaler(std::size_t scale) {
  return [scale](const Tensor& lr) {
    return bicubic_resize(lr, Ratio{scale, 1}, ResizeRounding::PerPass8Bit);
  };
}

Upscaler model_upscaler(const Model& model) {
  return [&model](const Tensor& lr) { return upscale_plane(model, lr); };
}

TestPair make_test_pair(const ImageY& ground_truth, std::size_t scale) {
  TestPair pair;
  pair.name = ground_truth.provenance;
  pair.hr = modcrop(ground_truth.y, scale);
  quantize(pair.hr);
  pair.lr = bicubic_resize(pair.hr, Ratio{1, scale}, ResizeRounding::PerPass8Bit);
  return pair;
}

std::vector<TestPair> make_test_pairs(const std::vector<ImageY>& images, std::size_t scale) {
  std::vector<TestPair> pairs;
  pairs.reserve(images.size());
  for (const ImageY& img : images) pairs.push_back(make_test_pair(img, scale));
  return pairs;
}

EvalResult evaluate(const Upscaler& upscaler, const std::vector<TestPair>& pairs,
                    std::size_t scale, std::size_t threads) {
  if (pairs.empty()) throw DomainError("evaluate: no test images");
  EvalResult result;
  result.scale = scale;
  result.shave = scale;
  result.names.resize(pairs.size());
  result.psnr.resize(pairs.size());
  auto run = [&](std::size_t i) {
    Tensor sr = upscaler(pairs[i].lr);
    quantize(sr);
    result.names[i] = pairs[i].name;
    result.psnr[i] = psnr(pairs[i].hr, sr, scale);
  };
  threads = std::clamp<std::size_t>(threads, 1, pairs.size());
  if (threads == 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < pairs.size(); i += threads) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  result.mean_psnr =
      std::accumulate(result.psnr.begin(), result.psnr.end(), 0.0) / static_cast<double>(pairs.size());
  return result;
}

EvalResult evaluate(const Upscaler& upscaler, const std::string& test_dir, std::size_t scale,
                    std::size_t threads) {
  const std::vector<ImageY> images = load_directory(test_dir);
  if (images.empty()) throw DomainError("evaluate: no images in '" + test_dir + "'");
  return evaluate(upscaler, make_test_pairs(images, scale), scale, threads);
}

void write_eval_csv(const EvalResult& result, std::ostream& out) {
  out << "image,scale,shave,psnr_db\n" << std::setprecision(9);
  for (std::size_t i = 0; i < result.names.size(); ++i) {
    out << result.names[i] << ',' << result.scale << ',' << result.shave << ',' << result.psnr[i]
        << '\n';
  }
  out << "mean," << result.scale << ',' << result.shave << ',' << result.mean_psnr << '\n';
}

void print_eval_table(const EvalResult& result, std::ostream& out) {
  std::size_t width = 5;
  for (const auto& n : result.names) width = std::max(width, n.size());
  out << std::left << std::setw(static_cast<int>(width)) << "image" << "  PSNR (dB)\n";
  out << std::fixed << std::setprecision(2);
  for (std::size_t i = 0; i < result.names.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(width)) << result.names[i] << "  "
        << result.psnr[i] << '\n';
  }
  out << std::left << std::setw(static_cast<int>(width)) << "mean" << "  " << result.mean_psnr
      << "   (x" << result.scale << ", shave " << result.shave << ")\n";
  out.unsetf(std::ios::floatfield);
}

BenchResult bench(const Model& model, std::size_t lr_h, std::size_t lr_w, std::size_t repeats) {
  if (repeats < 3) throw DomainError("bench: repeats must be >= 3");
  if (lr_h == 0 || lr_w == 0) throw DomainError("bench: empty input size");
  const Shape in_shape = model.spec().upsamples()
                             ? Shape{1, 1, lr_h, lr_w}
                             : Shape{1, 1, lr_h * model.scale(), lr_w * model.scale()};
  Tensor input(in_shape);
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  for (float& v : input.values()) v = dist(rng);

  BenchResult result;
  result.lr_h = lr_h;
  result.lr_w = lr_w;
  volatile float sink = 0.0f;
  for (std::size_t r = 0; r <= repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const Tensor out = model.forward(input);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    sink = sink + out[0];
    if (r > 0) result.seconds.push_back(elapsed);
  }
  std::vector<double> sorted = result.seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  result.median_seconds =
      sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  result.fps = 1.0 / result.median_seconds;
  result.macs = estimate_cost(model.spec(), static_cast<double>(lr_h * lr_w));
  result.gmacs_per_second = result.macs / result.median_seconds / 1e9;
  return result;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("linear_fit: need >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("linear_fit: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace fsrcnn
