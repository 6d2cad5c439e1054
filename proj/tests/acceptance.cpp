// Acceptance suite: one PASS / FAIL / SKIP line per criterion.
//
// Optional environment:
//   FSRCNN_SET5_DIR        Set5 ground-truth images (bicubic fixtures, training target)
//   FSRCNN_TRAIN_DIR       >= 20 training images; default is a synthetic dead-leaves corpus
//   FSRCNN_TEST_DIR        held-out images used when Set5 is absent
//   FSRCNN_ACCEPT_ITERS    SGD iterations per training run (default 20000)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "fsrcnn/errors.hpp"
#include "fsrcnn/training.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

using namespace fsrcnn;
using namespace fsrcnn::testing;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {Verdict::Fail, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
  failures += o.verdict == Verdict::Fail;
  std::printf("[%s] %2d %s: %s (%.1f s)\n", tag, id, title.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

Verdict verdict(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::size_t iteration_budget() {
  const std::string v = env("FSRCNN_ACCEPT_ITERS");
  return v.empty() ? 20000 : std::stoul(v);
}

// Rates of the desk-scale runs. The loss is the per-pixel mean, whose gradient
// is 2/P of a per-patch half-sum (P = 361 output pixels at x3), so the
// published 1e-3 / 1e-4 correspond to roughly 100x larger values here.
TrainConfig desk_config(std::size_t iterations) {
  TrainConfig cfg;
  cfg.lr_conv = 0.1;
  cfg.lr_deconv = 0.01;
  cfg.max_iterations = iterations;
  cfg.eval_every = std::max<std::size_t>(iterations / 20, 1);
  return cfg;
}

// Training images and held-out evaluation images for the desk-scale runs.
struct Corpus {
  std::vector<ImageY> train;
  std::vector<ImageY> test;
  std::string train_name;
  std::string test_name;
  bool is_set5 = false;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus c;
    if (const std::string dir = env("FSRCNN_TRAIN_DIR"); !dir.empty()) {
      c.train = load_directory(dir);
      c.train_name = dir;
      if (c.train.size() < 20) throw DomainError("FSRCNN_TRAIN_DIR holds fewer than 20 images");
    } else {
      c.train = dead_leaves_corpus(20, 128, 128, 1);
      c.train_name = "synthetic dead-leaves (20 x 128x128)";
    }
    if (const std::string dir = env("FSRCNN_SET5_DIR"); !dir.empty()) {
      c.test = load_directory(dir);
      c.test_name = "Set5";
      c.is_set5 = true;
    } else if (const std::string dir = env("FSRCNN_TEST_DIR"); !dir.empty()) {
      c.test = load_directory(dir);
      c.test_name = "held-out " + dir + " (Set5 proxy)";
    } else {
      c.test = dead_leaves_corpus(5, 128, 128, 1000);
      c.test_name = "held-out synthetic dead-leaves (Set5 proxy)";
    }
    return c;
  }();
  return c;
}

// x3 FSRCNN(32,5,1) trained once and shared by criteria 7 and 8.
struct X3Run {
  Model model;
  double seconds = 0.0;
};
const X3Run& x3_run() {
  static const X3Run run = [] {
    const auto start = std::chrono::steady_clock::now();
    const TrainingSet set = make_training_set(corpus().train, 3, 0, true);
    TrainConfig cfg = desk_config(iteration_budget());
    // No validation set: the test images stay unseen, the last iterate is kept.
    TrainResult r = train(build(ArchitectureSpec::fsrcnn(32, 5, 1, 3), {}, 1), set.pairs, {}, cfg);
    return X3Run{std::move(r.model),
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
  }();
  return run;
}

Outcome parameter_accounting() {
  struct Row {
    ArchitectureSpec spec;
    std::size_t expected;
  };
  std::vector<Row> rows{{ArchitectureSpec::srcnn_915(3), 8032},
                        {ArchitectureSpec::srcnn_ex_955(3), 57184},
                        {ArchitectureSpec::transition_1(3), 58976},
                        {ArchitectureSpec::transition_2(3), 17088},
                        {ArchitectureSpec::fsrcnn(56, 12, 4, 3), 12464},
                        {ArchitectureSpec::fsrcnn(32, 5, 1, 3), 3937}};
  const std::size_t grid[4][3] = {{8832, 10128, 11424},
                                  {9872, 11168, 12464},
                                  {11232, 13536, 15840},
                                  {12336, 14640, 16944}};
  const std::size_t ds[4] = {48, 56, 48, 56}, ss[4] = {12, 12, 16, 16};
  for (int i = 0; i < 4; ++i)
    for (std::size_t m = 2; m <= 4; ++m)
      rows.push_back({ArchitectureSpec::fsrcnn(ds[i], ss[i], m, 3), grid[i][m - 2]});
  std::size_t wrong = 0;
  std::ostringstream misses;
  for (const Row& r : rows) {
    const std::size_t got = count_parameters(r.spec);
    if (got != r.expected) {
      ++wrong;
      misses << ' ' << r.spec.name() << '=' << got << "!=" << r.expected;
    }
  }
  return {verdict(wrong == 0),
          std::to_string(rows.size() - wrong) + "/" + std::to_string(rows.size()) +
              " counts exact" + misses.str()};
}

Outcome speedup_ledger() {
  const ArchitectureSpec ex = ArchitectureSpec::srcnn_ex_955(3);
  const std::pair<ArchitectureSpec, double> rows[] = {
      {ArchitectureSpec::transition_1(3), 8.7},
      {ArchitectureSpec::transition_2(3), 30.1},
      {ArchitectureSpec::fsrcnn(56, 12, 4, 3), 41.3},
      {ArchitectureSpec::fsrcnn(48, 12, 2, 3), 58.3}};
  bool ok = true;
  std::ostringstream d;
  for (const auto& [spec, expected] : rows) {
    const double s = estimate_cost(ex, 1.0) / estimate_cost(spec, 1.0);
    ok = ok && std::abs(s - expected) <= 0.05;
    d << spec.name() << ' ' << fmt("%.3f", s) << "x (" << expected << ") ";
  }
  return {verdict(ok), d.str() + "tol 0.05"};
}

Outcome gradient_correctness() {
  double worst_conv = 0.0, worst_deconv = 0.0, worst_prelu = 0.0;
  std::size_t checks = 0;
  struct ConvGeom {
    std::size_t in, out, k;
  };
  for (const ConvGeom g : {ConvGeom{1, 4, 5}, ConvGeom{6, 3, 1}, ConvGeom{3, 3, 3}})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      ConvLayer layer(g.in, g.out, g.k);
      randomize(layer.weights.values(), seed, 0.5f);
      randomize(layer.bias, seed + 100, 0.5f);
      worst_conv = std::max(
          worst_conv,
          check_weighted_layer(layer, random_tensor({2, g.in, 6, 5}, seed + 200), seed).worst());
      ++checks;
    }
  for (std::size_t n = 2; n <= 4; ++n)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      DeconvLayer layer(4, 1, n);
      randomize(layer.weights.values(), seed, 0.5f);
      randomize(layer.bias, seed + 100, 0.5f);
      worst_deconv = std::max(
          worst_deconv,
          check_weighted_layer(layer, random_tensor({1, 4, 5, 4}, seed + 300), seed).worst());
      ++checks;
    }
  for (std::size_t c : {1, 5, 12})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      PReLULayer layer(c, 0.25f);
      randomize(layer.slopes, seed, 0.5f);
      worst_prelu = std::max(worst_prelu,
                             check_prelu(layer, random_tensor({2, c, 4, 4}, seed + 400), seed).worst());
      ++checks;
    }
  const double worst = std::max({worst_conv, worst_deconv, worst_prelu});
  return {verdict(worst < kFdTolerance),
          std::to_string(checks) + " checks, step 1e-3, max rel err conv " + fmt("%.2e", worst_conv) +
              " deconv " + fmt("%.2e", worst_deconv) + " prelu " + fmt("%.2e", worst_prelu) +
              " (tol 1e-3)"};
}

Outcome adjointness() {
  double worst = 0.0;
  for (std::size_t n = 2; n <= 4; ++n)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      DeconvLayer deconv(12, 1, n);
      randomize(deconv.weights.values(), seed);
      ConvLayer conv(1, 12, WindowGeometry{9, n, 4});
      conv.weights = Tensor(conv.weights.shape(), deconv.weights.flatten());
      const Tensor x = random_tensor({1, 12, 7, 6}, seed + 1);
      const Tensor y = random_tensor(deconv.output_shape(x.shape()), seed + 2);
      const Tensor ax = deconv.forward(x);
      const double lhs = dot(ax, y);
      const double rhs = dot(x, conv.forward(y));
      // Relative to the Cauchy-Schwarz bound: a raw ratio is meaningless when
      // the inner product itself cancels to near zero.
      worst = std::max(worst, std::abs(lhs - rhs) / std::sqrt(dot(ax, ax) * dot(y, y)));
    }
  return {verdict(worst < 1e-5), "kernel 9, stride 2/3/4, 30 seeds, max |<Ax,y>-<x,A'y>| / (|Ax||y|) " + fmt("%.2e", worst) +
                                     " (tol 1e-5)"};
}

Outcome shape_fixtures() {
  const std::size_t cases[3][3] = {{10, 2, 19}, {7, 3, 19}, {6, 4, 21}};
  bool ok = true;
  std::ostringstream d;
  for (const auto& c : cases) {
    const Model m = build(ArchitectureSpec::fsrcnn(56, 12, 4, c[1]), {}, 1);
    const Shape out = m.forward(Tensor({1, 1, c[0], c[0]})).shape();
    ok = ok && out.h == c[2] && out.w == c[2] && hr_patch_size(c[1]) == c[2];
    d << c[0] << "@x" << c[1] << "->" << out.h << ' ';
  }
  return {verdict(ok), d.str() + "(exact)"};
}

Outcome bicubic_baseline() {
  const std::string dir = env("FSRCNN_SET5_DIR");
  if (dir.empty()) return {Verdict::Skip, "FSRCNN_SET5_DIR not set; Set5 is not bundled"};
  const double expected[5] = {0, 0, 33.66, 30.39, 28.42};
  bool ok = true;
  std::ostringstream d;
  for (std::size_t n = 2; n <= 4; ++n) {
    const double got = evaluate(bicubic_upscaler(n), dir, n).mean_psnr;
    ok = ok && std::abs(got - expected[n]) <= 0.05;
    d << 'x' << n << ' ' << fmt("%.3f", got) << " (" << expected[n] << ") ";
  }
  return {verdict(ok), d.str() + "tol 0.05 dB"};
}

Outcome desk_training() {
  // Overfit smoke test at the same rates.
  const auto one = make_training_set({ImageY::gray(synthetic_plane(21, 21, 3))}, 3, 7).pairs;
  TrainConfig small = desk_config(500);
  small.batch_size = 1;
  const TrainResult fit = train(build(ArchitectureSpec::fsrcnn(32, 5, 1, 3), {}, 1), one, {}, small);
  const double drop = fit.report.loss.front() / fit.report.loss.back();

  const Corpus& c = corpus();
  const X3Run& run = x3_run();
  const auto pairs = make_test_pairs(c.test, 3);
  const double bicubic = evaluate(bicubic_upscaler(3), pairs, 3).mean_psnr;
  const double ours = evaluate(model_upscaler(run.model), pairs, 3).mean_psnr;
  const bool ok = ours >= bicubic + 0.3 && drop >= 100.0 && run.seconds <= 7200.0;
  std::ostringstream d;
  d << "FSRCNN(32,5,1) x3, " << iteration_budget() << " its on " << c.train_name << " in "
    << fmt("%.0f", run.seconds) << " s; " << c.test_name << ": " << fmt("%.3f", ours)
    << " dB vs bicubic " << fmt("%.3f", bicubic) << " (margin " << fmt("%+.3f", ours - bicubic)
    << ", need +0.3); overfit drop " << fmt("%.0f", drop) << "x (need 100x)";
  return {verdict(ok), d.str()};
}

Outcome transfer_parity() {
  const std::size_t budget = iteration_budget();
  const TrainingSet x2 = make_training_set(corpus().train, 2, 0, true);
  const auto val = make_test_pairs(corpus().test, 2);
  TrainConfig cfg = desk_config(budget);

  const TrainResult scratch =
      train(build(ArchitectureSpec::fsrcnn(32, 5, 1, 2), {}, 2), x2.pairs, val, cfg);
  // Fine-tuning halves the rates. Deconv-only updates at stride 2 gather ~20
  // taps per output pixel against 9 at x3, and full rates overshoot.
  TrainConfig ft = cfg;
  ft.finetune_halving = true;
  const TrainResult tuned = finetune_for_scale(x3_run().model, 2, x2.pairs, val, ft);

  const double scratch_final = scratch.report.best_psnr;
  const double tuned_final = tuned.report.best_psnr;
  std::size_t reach = budget + 1;
  for (std::size_t i = 0; i < tuned.report.eval_iterations.size(); ++i) {
    if (tuned.report.val_psnr[i] >= 0.95 * tuned_final) {
      reach = tuned.report.eval_iterations[i];
      break;
    }
  }
  const bool parity = tuned_final >= scratch_final - 0.1;
  const bool fast = static_cast<double>(reach) <= 0.25 * static_cast<double>(budget);
  std::ostringstream d;
  d << "x3->x2 deconv-only " << fmt("%.3f", tuned_final) << " dB vs scratch x2 "
    << fmt("%.3f", scratch_final) << " dB (gap " << fmt("%+.3f", tuned_final - scratch_final)
    << ", need >= -0.1) after " << budget << " its; 95% of final at iteration " << reach
    << " (need <= " << budget / 4 << ")";
  return {verdict(parity && fast), d.str()};
}

Outcome performance_scaling() {
  const Model big = build(ArchitectureSpec::fsrcnn(56, 12, 4, 3), {}, 1);
  const Model small = build(ArchitectureSpec::fsrcnn(32, 5, 1, 3), {}, 1);
  std::vector<double> pixels, seconds;
  for (std::size_t side : {48, 96, 144, 192}) {
    const BenchResult r = bench(big, side, side, 5);
    pixels.push_back(static_cast<double>(side * side));
    seconds.push_back(r.median_seconds);
  }
  const LinearFit fit = linear_fit(pixels, seconds);
  const BenchResult fb = bench(big, 120, 160, 5);
  const BenchResult fs = bench(small, 120, 160, 5);
  const double ratio = fs.fps / fb.fps;
  // Reported only: the published 24.7 / 1.32 fps are for a different machine.
  const BenchResult hd = bench(small, 240, 320, 3);
  std::ostringstream d;
  d << "R^2 " << fmt("%.4f", fit.r2) << " over 4 sizes (need > 0.95); fps ratio "
    << fmt("%.2f", ratio) << " at 120x160 (need >= 2); FSRCNN(32,5,1) 240x320 LR "
    << fmt("%.1f", hd.fps) << " fps, FSRCNN(56,12,4) 120x160 " << fmt("%.1f", fb.fps) << " fps";
  return {verdict(fit.r2 > 0.95 && ratio >= 2.0), d.str()};
}

Outcome determinism() {
  std::vector<ImageY> images = dead_leaves_corpus(3, 64, 64, 7);
  const auto pairs = make_training_set(images, 3, 0, true, 1).pairs;
  const auto val = make_test_pairs(dead_leaves_corpus(1, 48, 48, 8), 3);
  TrainConfig cfg = desk_config(200);
  cfg.rng_seed = 42;
  const Model init = build(ArchitectureSpec::fsrcnn(16, 5, 1, 3), {}, cfg.rng_seed);
  const auto a = save(train(init, pairs, val, cfg).model);
  const auto b = save(train(init, pairs, val, cfg).model);
  const bool same_ckpt = a == b;

  const Model loaded = load(a);
  const Model original = load(b);
  const Tensor x = dead_leaves_plane(40, 52, 9).reshaped({1, 1, 40, 52});
  const bool same_forward = loaded.forward(x) == original.forward(x) && save(loaded) == a;
  return {verdict(same_ckpt && same_forward),
          std::string("checkpoints ") + (same_ckpt ? "byte-identical" : "DIFFER") +
              ", save->load->forward " + (same_forward ? "bit-identical" : "DIFFERS")};
}

}  // namespace

int main() {
  std::printf("acceptance suite (training budget %zu iterations)\n", iteration_budget());
  report(1, "parameter accounting", parameter_accounting);
  report(2, "speedup ledger", speedup_ledger);
  report(3, "gradient correctness", gradient_correctness);
  report(4, "adjointness", adjointness);
  report(5, "shape fixtures", shape_fixtures);
  report(6, "bicubic baseline", bicubic_baseline);
  report(7, "desk-scale training", desk_training);
  report(8, "transfer parity", transfer_parity);
  report(9, "performance scaling", performance_scaling);
  report(10, "determinism & serialization", determinism);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
