#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fsrcnn/dataset.hpp"
#include "fsrcnn/eval.hpp"
#include "fsrcnn/model.hpp"

namespace fsrcnn {

struct TrainConfig {
  double lr_conv = 1e-3;    // conv weights, biases and PReLU slopes
  double lr_deconv = 1e-4;  // deconvolution layer
  bool finetune_halving = false;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t max_iterations = 1000;
  std::size_t eval_every = 100;  // 0 disables periodic validation
  std::uint64_t rng_seed = 1;
  bool freeze_conv = false;
  // Called after each iteration with (iteration, loss).
  std::function<void(std::size_t, double)> on_iteration;
  // Called after each validation with (iteration, psnr).
  std::function<void(std::size_t, double)> on_eval;
  // Checked after each validation; returning true ends training early.
  std::function<bool(std::size_t, double)> stop_after_eval;

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss;       // loss[i] is the loss of iteration i + 1
  std::vector<double> seconds;    // wall clock of iteration i + 1
  std::vector<std::size_t> eval_iterations;
  std::vector<double> val_psnr;   // parallel to eval_iterations
  std::size_t best_iteration = 0;
  double best_psnr = 0.0;
  std::uint32_t checksum = 0;     // CRC32 of the returned model

  // Rows of (iteration, loss, val_psnr, seconds); val_psnr is blank between
  // evaluations. Iteration 0 carries the initial validation only.
  void write_csv(std::ostream& out) const;
  void append(const TrainReport& later);
};

struct TrainResult {
  Model model;
  TrainReport report;
};

// Mini-batch SGD with momentum on the mean squared error. With a validation set
// the returned model is the best-PSNR checkpoint, otherwise the last iterate.
TrainResult train(Model model, const std::vector<SamplePair>& dataset,
                  const std::vector<TestPair>& valset, const TrainConfig& cfg);

// Transplants conv layers to `target_scale` and trains only the deconvolution.
TrainResult finetune_for_scale(const Model& src, std::size_t target_scale,
                               const std::vector<SamplePair>& dataset,
                               const std::vector<TestPair>& valset, TrainConfig cfg);

// Fires when the best PSNR inside the last `window` evaluations exceeds the
// window's first value by less than `threshold_db`.
class SaturationDetector {
 public:
  explicit SaturationDetector(std::size_t window = 5, double threshold_db = 0.01);
  bool push(double psnr);
  void reset() { history_.clear(); }

 private:
  std::size_t window_;
  double threshold_;
  std::vector<double> history_;
};

struct TwoStepConfig {
  TrainConfig train;
  std::size_t saturation_window = 5;
  double saturation_threshold_db = 0.01;
  std::size_t phase2_iterations = 1000;
};

struct TwoStepResult {
  Model model;
  TrainReport report;
  std::size_t switch_iteration = 0;  // last iteration of phase 1
  Model phase1_model;                // model handed to phase 2
};

// Phase 1 trains on `base_set` until validation saturates (or the iteration
// budget runs out); phase 2 continues on base + extra at halved rates.
TwoStepResult two_step_schedule(Model model, const std::vector<SamplePair>& base_set,
                                const std::vector<SamplePair>& extra_set,
                                const std::vector<TestPair>& valset, const TwoStepConfig& cfg);

// Inputs an SRCNN-style net trains on: the LR patch bicubic-upscaled and cropped
// to the HR target size.
std::vector<SamplePair> prepare_pairs(const Model& model, const std::vector<SamplePair>& pairs);

// Mean squared error of the model over a set of pairs.
double dataset_loss(const Model& model, const std::vector<SamplePair>& pairs);

// Mean PSNR of the model on the validation pairs.
double validation_psnr(const Model& model, const std::vector<TestPair>& valset);

}  // namespace fsrcnn
