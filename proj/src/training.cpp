#include "fsrcnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "fsrcnn/errors.hpp"

namespace fsrcnn {

void TrainConfig::validate() const {
  if (!(lr_conv > 0.0) || !(lr_deconv > 0.0)) throw DomainError("learning rates must be > 0");
  if (batch_size == 0) throw DomainError("batch_size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0) throw DomainError("momentum must lie in [0, 1)");
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "iteration,loss,val_psnr,seconds\n";
  out.precision(9);
  std::size_t next_eval = 0;
  auto psnr_at = [&](std::size_t it) -> std::string {
    if (next_eval < eval_iterations.size() && eval_iterations[next_eval] == it) {
      std::ostringstream s;
      s.precision(9);
      s << val_psnr[next_eval++];
      return s.str();
    }
    return {};
  };
  if (!eval_iterations.empty() && eval_iterations.front() == 0) {
    out << 0 << ",," << psnr_at(0) << ",\n";
  }
  for (std::size_t i = 0; i < loss.size(); ++i) {
    out << i + 1 << ',' << loss[i] << ',' << psnr_at(i + 1) << ',' << seconds[i] << '\n';
  }
}

void TrainReport::append(const TrainReport& later) {
  const std::size_t offset = loss.size();
  loss.insert(loss.end(), later.loss.begin(), later.loss.end());
  seconds.insert(seconds.end(), later.seconds.begin(), later.seconds.end());
  for (std::size_t i = 0; i < later.eval_iterations.size(); ++i) {
    const std::size_t it = later.eval_iterations[i] + offset;
    if (!eval_iterations.empty() && eval_iterations.back() == it) {
      val_psnr.back() = later.val_psnr[i];
      continue;
    }
    eval_iterations.push_back(it);
    val_psnr.push_back(later.val_psnr[i]);
  }
  best_psnr = later.best_psnr;
  best_iteration = later.best_iteration + offset;
  checksum = later.checksum;
}

std::vector<SamplePair> prepare_pairs(const Model& model, const std::vector<SamplePair>& pairs) {
  if (model.spec().upsamples()) return pairs;
  std::vector<SamplePair> out;
  out.reserve(pairs.size());
  for (const SamplePair& p : pairs) {
    const Tensor up = bicubic_resize(p.lr, Ratio{p.scale, 1});
    out.push_back({crop(up, 0, 0, p.hr.shape().h, p.hr.shape().w), p.hr, p.scale});
  }
  return out;
}

double dataset_loss(const Model& model, const std::vector<SamplePair>& pairs) {
  if (pairs.empty()) throw DomainError("dataset_loss: empty dataset");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  double total = 0.0;
  Tensor lr, hr;
  constexpr std::size_t kChunk = 256;
  for (std::size_t first = 0; first < pairs.size(); first += kChunk) {
    const std::size_t count = std::min(kChunk, pairs.size() - first);
    stack_batch(pairs, order, first, count, lr, hr);
    total += mse(model.forward(lr), hr) * static_cast<double>(count);
  }
  return total / static_cast<double>(pairs.size());
}

double validation_psnr(const Model& model, const std::vector<TestPair>& valset) {
  if (valset.empty()) throw DomainError("validation set is empty");
  return evaluate(model_upscaler(model), valset, model.scale()).mean_psnr;
}

namespace {

double group_rate(ParamGroup group, const TrainConfig& cfg) {
  const double scale = cfg.finetune_halving ? 0.5 : 1.0;
  return (group == ParamGroup::Deconv ? cfg.lr_deconv : cfg.lr_conv) * scale;
}

}  // namespace

TrainResult train(Model model, const std::vector<SamplePair>& dataset,
                  const std::vector<TestPair>& valset, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw DomainError("train: dataset is empty");
  for (const SamplePair& p : dataset) {
    if (p.scale != model.scale()) {
      throw SpecError("train: dataset scale " + std::to_string(p.scale) +
                      " differs from model scale " + std::to_string(model.scale()));
    }
  }
  if (cfg.freeze_conv) model.freeze_all_but_deconv();

  const std::vector<SamplePair> pairs = prepare_pairs(model, dataset);
  const std::size_t batch = std::min(cfg.batch_size, pairs.size());

  std::vector<ParamBlock> params = model.parameters();
  std::vector<std::vector<float>> velocity;
  velocity.reserve(params.size());
  for (const ParamBlock& p : params) velocity.emplace_back(p.values.size(), 0.0f);

  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  TrainReport report;
  std::optional<Model> best;
  auto run_validation = [&](std::size_t iteration) {
    const double value = validation_psnr(model, valset);
    report.eval_iterations.push_back(iteration);
    report.val_psnr.push_back(value);
    if (!best || value > report.best_psnr) {
      best = model;
      report.best_psnr = value;
      report.best_iteration = iteration;
    }
    if (cfg.on_eval) cfg.on_eval(iteration, value);
    return cfg.stop_after_eval && cfg.stop_after_eval(iteration, value);
  };

  bool stop = false;
  if (!valset.empty()) stop = run_validation(0);

  Tensor lr, hr;
  for (std::size_t it = 1; it <= cfg.max_iterations && !stop; ++it) {
    const auto start = std::chrono::steady_clock::now();
    if (cursor + batch > order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    stack_batch(pairs, order, cursor, batch, lr, hr);
    cursor += batch;

    const Activations trace = model.forward_trace(lr);
    const Tensor& out = trace.back();
    const double loss = mse(out, hr);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "training diverged at iteration " << it << " (loss " << loss
          << ", lr_conv " << group_rate(ParamGroup::Conv, cfg) << ", lr_deconv "
          << group_rate(ParamGroup::Deconv, cfg) << ")";
      throw DivergenceError(msg.str());
    }
    // d/d(out) of mean((out - hr)^2)
    Tensor grad(out.shape());
    const float scale = 2.0f / static_cast<float>(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) grad[i] = scale * (out[i] - hr[i]);

    const std::vector<std::vector<float>> grads = model.backward(trace, grad);
    const auto mu = static_cast<float>(cfg.momentum);
    for (std::size_t b = 0; b < params.size(); ++b) {
      if (model.frozen()[params[b].layer]) continue;
      const auto rate = static_cast<float>(group_rate(params[b].group, cfg));
      std::span<float> values = params[b].values;
      std::vector<float>& v = velocity[b];
      const std::vector<float>& g = grads[b];
      for (std::size_t i = 0; i < values.size(); ++i) {
        v[i] = mu * v[i] + rate * g[i];
        values[i] -= v[i];
      }
    }

    report.loss.push_back(loss);
    report.seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (cfg.on_iteration) cfg.on_iteration(it, loss);

    const bool last = it == cfg.max_iterations;
    if (!valset.empty() && ((cfg.eval_every && it % cfg.eval_every == 0) || last)) {
      stop = run_validation(it);
    }
  }

  TrainResult result{best ? std::move(*best) : std::move(model), std::move(report)};
  result.report.checksum = checksum(result.model);
  return result;
}

TrainResult finetune_for_scale(const Model& src, std::size_t target_scale,
                               const std::vector<SamplePair>& dataset,
                               const std::vector<TestPair>& valset, TrainConfig cfg) {
  Model target = transplant_conv_layers(src, target_scale, cfg.rng_seed);
  cfg.freeze_conv = true;
  return train(std::move(target), dataset, valset, cfg);
}

SaturationDetector::SaturationDetector(std::size_t window, double threshold_db)
    : window_(std::max<std::size_t>(window, 1)), threshold_(threshold_db) {}

bool SaturationDetector::push(double psnr) {
  history_.push_back(psnr);
  if (history_.size() < window_) return false;
  const auto first = history_.end() - static_cast<std::ptrdiff_t>(window_);
  const double best = *std::max_element(first, history_.end());
  return best - *first < threshold_;
}

TwoStepResult two_step_schedule(Model model, const std::vector<SamplePair>& base_set,
                                const std::vector<SamplePair>& extra_set,
                                const std::vector<TestPair>& valset, const TwoStepConfig& cfg) {
  if (!base_set.empty() && !extra_set.empty() && base_set.front().scale != extra_set.front().scale) {
    throw SpecError("two_step_schedule: base and extra sets differ in scale");
  }
  TrainConfig phase1 = cfg.train;
  SaturationDetector detector(cfg.saturation_window, cfg.saturation_threshold_db);
  const auto user_stop = phase1.stop_after_eval;
  phase1.stop_after_eval = [&](std::size_t it, double value) {
    const bool saturated = detector.push(value);
    return saturated || (user_stop && user_stop(it, value));
  };
  TrainResult first = train(std::move(model), base_set, valset, phase1);

  std::vector<SamplePair> merged = base_set;
  merged.insert(merged.end(), extra_set.begin(), extra_set.end());
  TrainConfig phase2 = cfg.train;
  phase2.finetune_halving = true;
  phase2.max_iterations = cfg.phase2_iterations;
  phase2.rng_seed = cfg.train.rng_seed + 1;

  TwoStepResult result;
  result.phase1_model = first.model;
  result.switch_iteration = first.report.loss.size();
  TrainResult second = train(first.model, merged, valset, phase2);
  result.report = std::move(first.report);
  result.report.append(second.report);
  result.model = std::move(second.model);
  result.report.checksum = checksum(result.model);
  return result;
}

}  // namespace fsrcnn
