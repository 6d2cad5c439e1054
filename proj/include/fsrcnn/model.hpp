#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fsrcnn/layers.hpp"
#include "fsrcnn/tensor.hpp"

namespace fsrcnn {

enum class ArchKind : std::uint8_t {
  Srcnn915 = 0,    // Conv(9,64,1)-ReLU-Conv(1,32,64)-ReLU-Conv(5,1,32)
  SrcnnEx955 = 1,  // Conv(9,64,1)-ReLU-Conv(5,32,64)-ReLU-Conv(5,1,32)
  Transition1 = 2,
  Transition2 = 3,
  Fsrcnn = 4,
};

enum class LayerKind : std::uint8_t { Conv = 1, PReLU = 2, Deconv = 3, ReLU = 4 };

// One entry of the symbolic layer list. For activations only `channels` is used.
struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  std::size_t filter = 0;    // f_i
  std::size_t filters = 0;   // n_i
  std::size_t channels = 0;  // c_i
  std::size_t stride = 1;

  bool weighted() const { return kind == LayerKind::Conv || kind == LayerKind::Deconv; }
  bool operator==(const LayerSpec&) const = default;
};

struct ArchitectureSpec {
  ArchKind kind = ArchKind::Fsrcnn;
  std::size_t d = 0;
  std::size_t s = 0;
  std::size_t m = 0;
  std::size_t scale = 3;
  std::vector<LayerSpec> layers;

  static ArchitectureSpec fsrcnn(std::size_t d, std::size_t s, std::size_t m, std::size_t scale);
  static ArchitectureSpec srcnn_915(std::size_t scale);
  static ArchitectureSpec srcnn_ex_955(std::size_t scale);
  static ArchitectureSpec transition_1(std::size_t scale);
  static ArchitectureSpec transition_2(std::size_t scale);
  // Rebuilds the layer list of `kind` with the given hyper-parameters.
  static ArchitectureSpec make(ArchKind kind, std::size_t d, std::size_t s, std::size_t m,
                               std::size_t scale);

  // True when the network ends in a deconvolution and runs on the LR image.
  bool upsamples() const { return kind != ArchKind::Srcnn915 && kind != ArchKind::SrcnnEx955; }
  std::string name() const;
  // "Conv(5,56,1)-PReLU-..." notation.
  std::string structure() const;
  bool operator==(const ArchitectureSpec&) const = default;
};

// Parses "fsrcnn:d,s,m", "srcnn:915", "srcnn:955", "transition:1", "transition:2".
ArchitectureSpec parse_architecture(const std::string& text, std::size_t scale);

using Layer = std::variant<ConvLayer, PReLULayer, DeconvLayer>;

enum class ParamGroup { Conv, Deconv, PReLU };

// A contiguous block of learnable values inside a layer.
struct ParamBlock {
  std::span<float> values;
  ParamGroup group;
  std::size_t layer;
};

struct InitPolicy {
  float prelu_slope = 0.25f;
  float deconv_stddev = 1e-3f;
};

// Per-layer activations recorded by a training forward pass: entry i is the
// input of layer i, the last entry is the network output.
using Activations = std::vector<Tensor>;

class Model {
 public:
  Model() = default;
  Model(ArchitectureSpec spec, std::vector<Layer> layers);

  const ArchitectureSpec& spec() const { return spec_; }
  std::size_t scale() const { return spec_.scale; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  Tensor forward(const Tensor& input) const;
  Activations forward_trace(const Tensor& input) const;
  // Output of every layer before the final deconvolution (or before the last
  // conv for SRCNN-style nets).
  Tensor features(const Tensor& input) const;

  // Learnable blocks in layer order: conv/deconv weights then bias, PReLU slopes.
  std::vector<ParamBlock> parameters();
  // Gradients of <grad_output, forward(input)> with respect to parameters(),
  // one vector per block, in the same order.
  std::vector<std::vector<float>> backward(const Activations& trace, const Tensor& grad_output) const;

  // Layers marked frozen are excluded from updates during training.
  const std::vector<bool>& frozen() const { return frozen_; }
  void set_frozen(std::size_t layer, bool value) { frozen_.at(layer) = value; }
  void freeze_all_but_deconv();

  std::size_t deconv_index() const;  // throws SpecError for SRCNN-style nets

 private:
  ArchitectureSpec spec_;
  std::vector<Layer> layers_;
  std::vector<bool> frozen_;
};

// Validates (d, s, m, n) and the layer list; throws SpecError.
void validate(const ArchitectureSpec& spec);

Model build(const ArchitectureSpec& spec, const InitPolicy& init, std::uint64_t seed);

// Weights-only count sum f^2*n*c; with the flag, also biases and PReLU slopes.
std::size_t count_parameters(const ArchitectureSpec& spec, bool include_bias_and_prelu = false);

// Multiply-accumulates per LR pixel.
double macs_per_lr_pixel(const ArchitectureSpec& spec);
// Multiply-accumulates to super-resolve an image of lr_pixels at the spec's scale.
double estimate_cost(const ArchitectureSpec& spec, double lr_pixels);
// cost(reference) / cost(spec) for the same LR size.
double speedup(const ArchitectureSpec& reference, const ArchitectureSpec& spec);

// Copies every conv and PReLU layer of an FSRCNN model into a fresh model at
// `target_scale` with a newly initialised deconvolution. Conv layers are frozen.
Model transplant_conv_layers(const Model& src, std::size_t target_scale, std::uint64_t seed,
                             const InitPolicy& init = {});

// Binary weight format ("FSRC", version 1, little endian, trailing CRC32).
std::vector<std::uint8_t> save(const Model& model);
Model load(std::span<const std::uint8_t> bytes);
void save_file(const Model& model, const std::string& path);
Model load_file(const std::string& path);

// CRC32 of the serialized parameters; stable identifier for a trained model.
std::uint32_t checksum(const Model& model);

}  // namespace fsrcnn
