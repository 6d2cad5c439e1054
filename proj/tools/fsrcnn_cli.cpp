#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>

#include "fsrcnn/dataset.hpp"
#include "fsrcnn/errors.hpp"
#include "fsrcnn/eval.hpp"
#include "fsrcnn/model.hpp"
#include "fsrcnn/training.hpp"

using namespace fsrcnn;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;

struct UsageError : Error {
  using Error::Error;
};

struct TrainFlags {
  std::string images;
  std::string val;
  std::string report;
  std::size_t stride = 0;
  bool augment = false;
  TrainConfig cfg;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--images", f.images, "Directory of ground-truth training images")->required();
  cmd->add_option("--val", f.val, "Directory of validation images (enables best-PSNR checkpointing)");
  cmd->add_option("--report", f.report, "Training curve CSV (iteration,loss,val_psnr,seconds)");
  cmd->add_option("--stride", f.stride, "LR sub-image stride; 0 = sub-image size")->capture_default_str();
  cmd->add_flag("--augment", f.augment, "Add the 5 scales x 4 rotations augmentation");
  cmd->add_option("--iterations", f.cfg.max_iterations, "SGD iterations")->capture_default_str();
  cmd->add_option("--batch", f.cfg.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--lr-conv", f.cfg.lr_conv, "Learning rate of conv layers and PReLU slopes")
      ->capture_default_str();
  cmd->add_option("--lr-deconv", f.cfg.lr_deconv, "Learning rate of the deconvolution layer")
      ->capture_default_str();
  cmd->add_option("--momentum", f.cfg.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--eval-every", f.cfg.eval_every, "Validate every N iterations (0 = end only)")
      ->capture_default_str();
  cmd->add_option("--seed", f.cfg.rng_seed, "Seed for initialisation and shuffling")
      ->capture_default_str();
}

std::vector<TestPair> load_valset(const std::string& dir, std::size_t scale) {
  if (dir.empty()) return {};
  auto images = load_directory(dir);
  if (images.empty()) throw IoError("no images in validation directory '" + dir + "'");
  return make_test_pairs(images, scale);
}

std::vector<SamplePair> load_pairs(const std::string& dir, std::size_t scale, std::size_t stride,
                                   bool augment, std::size_t threads) {
  auto images = load_directory(dir);
  if (images.empty()) throw IoError("no images in '" + dir + "'");
  TrainingSet set = make_training_set(images, scale, stride, augment, threads);
  for (const auto& w : set.warnings) std::cerr << "warning: " << w << '\n';
  if (set.pairs.empty()) throw UsageError("no training pairs could be cut from '" + dir + "'");
  std::cerr << dir << ": " << images.size() << " images, " << set.variants << " variants, "
            << set.pairs.size() << " pairs\n";
  return std::move(set.pairs);
}

void print_progress(TrainConfig& cfg) {
  cfg.on_eval = [](std::size_t it, double psnr) {
    std::cerr << "iteration " << it << ": validation " << std::fixed << std::setprecision(3)
              << psnr << " dB\n";
    std::cerr.unsetf(std::ios::floatfield);
  };
}

void write_report(const TrainReport& report, const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  report.write_csv(out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

void summarize(const TrainReport& report, const std::string& out) {
  std::cout << "saved " << out << " (crc32 " << std::hex << std::setw(8) << std::setfill('0')
            << report.checksum << std::dec << std::setfill(' ') << ")\n";
  if (!report.loss.empty()) std::cout << "final loss " << report.loss.back() << '\n';
  if (!report.val_psnr.empty()) {
    std::cout << "best validation " << std::fixed << std::setprecision(3) << report.best_psnr
              << " dB at iteration " << report.best_iteration << '\n';
  }
}

// "bicubic" or a weight file.
struct Upscaling {
  std::optional<Model> model;
  std::size_t scale = 0;
};

Upscaling resolve_model(const std::string& name, std::size_t scale) {
  Upscaling u;
  if (name == "bicubic") {
    if (scale == 0) throw UsageError("--scale is required with the bicubic model");
    u.scale = scale;
    return u;
  }
  u.model = load_file(name);
  u.scale = u.model->scale();
  if (scale != 0 && scale != u.scale) {
    throw UsageError("model '" + name + "' is x" + std::to_string(u.scale) +
                     " but --scale " + std::to_string(scale) + " was given");
  }
  return u;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  static const std::regex re(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw UsageError("size must look like HxW, got '" + text + "'");
  const std::size_t h = std::stoul(m[1]), w = std::stoul(m[2]);
  if (h == 0 || w == 0) throw UsageError("size must be positive, got '" + text + "'");
  return {h, w};
}

int cmd_params(const std::string& arch, std::size_t scale) {
  const ArchitectureSpec spec = parse_architecture(arch, scale);
  const ArchitectureSpec ref = ArchitectureSpec::srcnn_ex_955(scale);
  std::cout << spec.name() << "  x" << scale << '\n'
            << spec.structure() << '\n'
            << "parameters (weights only)  " << count_parameters(spec) << '\n'
            << "parameters (with biases)   " << count_parameters(spec, true) << '\n'
            << "MACs per LR pixel          " << macs_per_lr_pixel(spec) << '\n'
            << "speedup vs SRCNN-Ex        " << std::fixed << std::setprecision(1)
            << speedup(ref, spec) << "x\n";
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"FSRCNN / SRCNN super-resolution toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = 1;
  app.add_option("--threads", threads, "Worker threads for data preparation and evaluation")
      ->envname("FSRCNN_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // params
  std::string arch;
  std::size_t scale = 3;
  auto* params = app.add_subcommand("params", "Parameter count, MACs and speedup of an architecture");
  params->add_option("arch", arch, "fsrcnn:d,s,m | srcnn:915 | srcnn:955 | transition:1 | transition:2")
      ->required();
  params->add_option("--scale", scale, "Upscaling factor (2, 3 or 4)")->capture_default_str();

  // prepare
  std::string images, manifest;
  std::size_t stride = 0;
  bool augment = false;
  auto* prepare = app.add_subcommand("prepare", "Cut LR/HR training pairs and write their index");
  prepare->add_option("--images", images, "Directory of ground-truth images")->required();
  prepare->add_option("--manifest", manifest, "Output index (TSV)")->required();
  prepare->add_option("--scale", scale, "Upscaling factor")->capture_default_str();
  prepare->add_option("--stride", stride, "LR sub-image stride; 0 = sub-image size")->capture_default_str();
  prepare->add_flag("--augment", augment, "Add the 5 scales x 4 rotations augmentation");

  // train
  TrainFlags tf;
  std::string out, extra;
  std::size_t window = 5, phase2 = 1000;
  double saturation_db = 0.01;
  auto* train_cmd = app.add_subcommand("train", "Train a network from scratch");
  train_cmd->add_option("--arch", arch, "Architecture string")->required();
  train_cmd->add_option("--scale", scale, "Upscaling factor")->capture_default_str();
  train_cmd->add_option("--out", out, "Output weight file")->required();
  add_train_flags(train_cmd, tf);
  train_cmd->add_option("--extra", extra,
                        "Second image set added once validation saturates (needs --val)");
  train_cmd->add_option("--saturation-window", window, "Evaluations in the saturation window")
      ->capture_default_str();
  train_cmd->add_option("--saturation-db", saturation_db, "Minimum gain (dB) over the window")
      ->capture_default_str();
  train_cmd->add_option("--phase2-iterations", phase2, "Iterations after adding --extra")
      ->capture_default_str();

  // finetune
  TrainFlags ff;
  std::string src;
  bool halve = false;
  auto* finetune = app.add_subcommand("finetune", "Reuse conv layers of an FSRCNN for another scale");
  finetune->add_option("--src", src, "Source FSRCNN weight file")->required();
  finetune->add_option("--scale", scale, "Target upscaling factor")->required();
  finetune->add_option("--out", out, "Output weight file")->required();
  finetune->add_flag("--halve", halve, "Halve both learning rates");
  add_train_flags(finetune, ff);

  // upscale
  std::string model_name, in_path;
  std::size_t upscale_factor = 0;
  auto* upscale = app.add_subcommand("upscale", "Super-resolve one image");
  upscale->add_option("--model", model_name, "Weight file or 'bicubic'")->required();
  upscale->add_option("--in", in_path, "Input image")->required();
  upscale->add_option("--out", out, "Output image (.png, .ppm, .pgm, .bmp)")->required();
  upscale->add_option("--scale", upscale_factor, "Upscaling factor (required for bicubic)");

  // eval
  std::string dir, csv, scatter;
  std::size_t eval_factor = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Mean PSNR over a directory of ground-truth images");
  eval_cmd->add_option("--model", model_name, "Weight file or 'bicubic'")->required();
  eval_cmd->add_option("--dir", dir, "Directory of ground-truth images")->required();
  eval_cmd->add_option("--scale", eval_factor, "Upscaling factor (required for bicubic)");
  eval_cmd->add_option("--csv", csv, "Per-image results CSV");
  eval_cmd->add_option("--scatter", scatter, "Append a model,scale,fps,psnr_db row for plotting");

  // bench
  std::vector<std::string> sizes{"60x80"};
  std::size_t repeats = 5;
  auto* bench_cmd = app.add_subcommand("bench", "Time forward passes");
  auto* arch_opt = bench_cmd->add_option("--arch", arch, "Architecture string (random weights)");
  bench_cmd->add_option("--model", model_name, "Weight file")->excludes(arch_opt);
  bench_cmd->add_option("--scale", scale, "Upscaling factor for --arch")->capture_default_str();
  bench_cmd->add_option("--size", sizes, "LR sizes HxW")->capture_default_str();
  bench_cmd->add_option("--repeats", repeats, "Timed runs per size (>= 3)")->capture_default_str();
  bench_cmd->add_option("--csv", csv, "Results CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (params->parsed()) return cmd_params(arch, scale);

  if (prepare->parsed()) {
    auto imgs = load_directory(images);
    if (imgs.empty()) throw IoError("no images in '" + images + "'");
    const TrainingSet set = make_training_set(imgs, scale, stride, augment, threads);
    for (const auto& w : set.warnings) std::cerr << "warning: " << w << '\n';
    write_manifest(set, manifest);
    std::cout << imgs.size() << " images, " << set.variants << " variants, " << set.pairs.size()
              << " pairs (lr " << lr_patch_size(scale) << ", hr " << hr_patch_size(scale) << ")\n";
    return 0;
  }

  if (train_cmd->parsed()) {
    const ArchitectureSpec spec = parse_architecture(arch, scale);
    tf.cfg.validate();
    const auto base = load_pairs(tf.images, scale, tf.stride, tf.augment, threads);
    const auto val = load_valset(tf.val, scale);
    Model model = build(spec, {}, tf.cfg.rng_seed);
    print_progress(tf.cfg);
    TrainReport report;
    Model trained = model;
    if (!extra.empty()) {
      if (val.empty()) throw UsageError("--extra needs --val to detect saturation");
      const auto more = load_pairs(extra, scale, tf.stride, tf.augment, threads);
      TwoStepConfig two{tf.cfg, window, saturation_db, phase2};
      TwoStepResult r = two_step_schedule(std::move(model), base, more, val, two);
      std::cerr << "validation saturated after iteration " << r.switch_iteration << '\n';
      trained = std::move(r.model);
      report = std::move(r.report);
    } else {
      TrainResult r = train(std::move(model), base, val, tf.cfg);
      trained = std::move(r.model);
      report = std::move(r.report);
    }
    save_file(trained, out);
    write_report(report, tf.report);
    summarize(report, out);
    return 0;
  }

  if (finetune->parsed()) {
    const Model source = load_file(src);
    ff.cfg.finetune_halving = halve;
    ff.cfg.validate();
    if (source.spec().kind != ArchKind::Fsrcnn) {
      throw UsageError("finetune needs an FSRCNN source, '" + src + "' is " + source.spec().name());
    }
    const auto data = load_pairs(ff.images, scale, ff.stride, ff.augment, threads);
    const auto val = load_valset(ff.val, scale);
    print_progress(ff.cfg);
    TrainResult r = finetune_for_scale(source, scale, data, val, ff.cfg);
    save_file(r.model, out);
    write_report(r.report, ff.report);
    summarize(r.report, out);
    return 0;
  }

  if (upscale->parsed()) {
    const Upscaling u = resolve_model(model_name, upscale_factor);
    const ImageY img = load_image(in_path);
    ImageY result;
    if (u.model) {
      result = upscale_full(*u.model, img);
    } else {
      result = bicubic_resize(img, Ratio{u.scale, 1});
      clamp01(result.y);
      if (result.cb) clamp01(*result.cb);
      if (result.cr) clamp01(*result.cr);
    }
    save_image(result, out);
    std::cout << in_path << " " << img.width() << "x" << img.height() << " -> " << out << " "
              << result.width() << "x" << result.height() << '\n';
    return 0;
  }

  if (eval_cmd->parsed()) {
    const Upscaling u = resolve_model(model_name, eval_factor);
    const Upscaler up = u.model ? model_upscaler(*u.model) : bicubic_upscaler(u.scale);
    const auto start = std::chrono::steady_clock::now();
    const EvalResult r = evaluate(up, dir, u.scale, threads);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    print_eval_table(r, std::cout);
    if (!csv.empty()) {
      std::ofstream f(csv);
      if (!f) throw IoError("cannot open '" + csv + "' for writing");
      write_eval_csv(r, f);
    }
    if (!scatter.empty()) {
      const bool fresh = !std::filesystem::exists(scatter);
      std::ofstream f(scatter, std::ios::app);
      if (!f) throw IoError("cannot open '" + scatter + "' for writing");
      if (fresh) f << "model,scale,fps,psnr_db\n";
      f << (u.model ? u.model->spec().name() : std::string("bicubic")) << ',' << u.scale << ','
        << static_cast<double>(r.psnr.size()) / seconds << ',' << r.mean_psnr << '\n';
    }
    return 0;
  }

  if (bench_cmd->parsed()) {
    if (arch.empty() && model_name.empty()) throw UsageError("bench needs --arch or --model");
    const Model model =
        model_name.empty() ? build(parse_architecture(arch, scale), {}, 1) : load_file(model_name);
    std::ofstream f;
    if (!csv.empty()) {
      f.open(csv);
      if (!f) throw IoError("cannot open '" + csv + "' for writing");
      f << "model,scale,lr_h,lr_w,median_seconds,fps,macs,gmacs_per_second\n";
    }
    std::cout << model.spec().name() << " x" << model.scale() << " (1 thread)\n";
    for (const std::string& s : sizes) {
      const auto [h, w] = parse_size(s);
      const BenchResult r = bench(model, h, w, repeats);
      std::cout << std::setw(9) << s << "  " << std::fixed << std::setprecision(4)
                << r.median_seconds << " s  " << std::setprecision(2) << r.fps << " fps  "
                << r.gmacs_per_second << " GMAC/s\n";
      std::cout.unsetf(std::ios::floatfield);
      if (f.is_open()) {
        f << model.spec().name() << ',' << model.scale() << ',' << h << ',' << w << ','
          << r.median_seconds << ',' << r.fps << ',' << r.macs << ',' << r.gmacs_per_second << '\n';
      }
    }
    return 0;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    // Spec, domain, shape and size errors all stem from bad arguments.
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
}
