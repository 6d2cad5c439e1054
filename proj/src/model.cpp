#include "fsrcnn/model.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "fsrcnn/errors.hpp"

namespace fsrcnn {
namespace {

LayerSpec conv(std::size_t f, std::size_t n, std::size_t c) {
  return {LayerKind::Conv, f, n, c, 1};
}
LayerSpec deconv(std::size_t f, std::size_t n, std::size_t c, std::size_t stride) {
  return {LayerKind::Deconv, f, n, c, stride};
}
LayerSpec act(LayerKind kind, std::size_t c) { return {kind, 0, c, c, 1}; }

// Appends Conv-PReLU for each conv spec.
void push_with_prelu(std::vector<LayerSpec>& layers, LayerSpec c) {
  layers.push_back(c);
  layers.push_back(act(LayerKind::PReLU, c.filters));
}

void check_scale(std::size_t scale) {
  if (scale < 2 || scale > 4) {
    throw SpecError("scale factor must be 2, 3 or 4 (got " + std::to_string(scale) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Architectures

ArchitectureSpec ArchitectureSpec::fsrcnn(std::size_t d, std::size_t s, std::size_t m,
                                          std::size_t scale) {
  return make(ArchKind::Fsrcnn, d, s, m, scale);
}
ArchitectureSpec ArchitectureSpec::srcnn_915(std::size_t scale) {
  return make(ArchKind::Srcnn915, 0, 0, 0, scale);
}
ArchitectureSpec ArchitectureSpec::srcnn_ex_955(std::size_t scale) {
  return make(ArchKind::SrcnnEx955, 0, 0, 0, scale);
}
ArchitectureSpec ArchitectureSpec::transition_1(std::size_t scale) {
  return make(ArchKind::Transition1, 0, 0, 0, scale);
}
ArchitectureSpec ArchitectureSpec::transition_2(std::size_t scale) {
  return make(ArchKind::Transition2, 0, 0, 0, scale);
}

ArchitectureSpec ArchitectureSpec::make(ArchKind kind, std::size_t d, std::size_t s,
                                        std::size_t m, std::size_t scale) {
  check_scale(scale);
  ArchitectureSpec spec;
  spec.kind = kind;
  spec.scale = scale;
  auto& L = spec.layers;
  switch (kind) {
    case ArchKind::Srcnn915:
    case ArchKind::SrcnnEx955: {
      const std::size_t f2 = kind == ArchKind::Srcnn915 ? 1 : 5;
      L.push_back(conv(9, 64, 1));
      L.push_back(act(LayerKind::ReLU, 64));
      L.push_back(conv(f2, 32, 64));
      L.push_back(act(LayerKind::ReLU, 32));
      L.push_back(conv(5, 1, 32));
      break;
    }
    case ArchKind::Transition1:
      push_with_prelu(L, conv(9, 64, 1));
      push_with_prelu(L, conv(5, 32, 64));
      L.push_back(deconv(9, 1, 32, scale));
      break;
    case ArchKind::Transition2:
      spec.d = 64;
      spec.s = 12;
      spec.m = 4;
      push_with_prelu(L, conv(9, 64, 1));
      push_with_prelu(L, conv(1, 12, 64));
      for (int i = 0; i < 4; ++i) push_with_prelu(L, conv(3, 12, 12));
      push_with_prelu(L, conv(1, 64, 12));
      L.push_back(deconv(9, 1, 64, scale));
      break;
    case ArchKind::Fsrcnn:
      if (d == 0 || s == 0 || s > d) {
        throw SpecError("FSRCNN requires d >= s >= 1 (got d=" + std::to_string(d) +
                        ", s=" + std::to_string(s) + ")");
      }
      spec.d = d;
      spec.s = s;
      spec.m = m;
      push_with_prelu(L, conv(5, d, 1));
      push_with_prelu(L, conv(1, s, d));
      for (std::size_t i = 0; i < m; ++i) push_with_prelu(L, conv(3, s, s));
      push_with_prelu(L, conv(1, d, s));
      L.push_back(deconv(9, 1, d, scale));
      break;
    default:
      throw SpecError("unknown architecture kind " + std::to_string(static_cast<int>(kind)));
  }
  return spec;
}

std::string ArchitectureSpec::name() const {
  switch (kind) {
    case ArchKind::Srcnn915: return "SRCNN(9-1-5)";
    case ArchKind::SrcnnEx955: return "SRCNN-Ex(9-5-5)";
    case ArchKind::Transition1: return "Transition-1";
    case ArchKind::Transition2: return "Transition-2";
    case ArchKind::Fsrcnn:
      return "FSRCNN(" + std::to_string(d) + "," + std::to_string(s) + "," + std::to_string(m) +
             ")";
  }
  return "?";
}

std::string ArchitectureSpec::structure() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (i) out << '-';
    switch (l.kind) {
      case LayerKind::Conv:
        out << "Conv(" << l.filter << ',' << l.filters << ',' << l.channels << ')';
        break;
      case LayerKind::Deconv:
        out << "DeConv(" << l.filter << ',' << l.filters << ',' << l.channels << ')';
        break;
      case LayerKind::PReLU: out << "PReLU"; break;
      case LayerKind::ReLU: out << "ReLU"; break;
    }
  }
  return out.str();
}

void validate(const ArchitectureSpec& spec) {
  const ArchitectureSpec expected = ArchitectureSpec::make(spec.kind, spec.d, spec.s, spec.m,
                                                           spec.scale);
  if (!(expected == spec)) throw SpecError("layer list does not realize " + expected.name());
}

ArchitectureSpec parse_architecture(const std::string& text, std::size_t scale) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw SpecError("architecture '" + text + "' lacks ':'");
  const std::string family = text.substr(0, colon);
  const std::string args = text.substr(colon + 1);
  if (family == "srcnn") {
    if (args == "915") return ArchitectureSpec::srcnn_915(scale);
    if (args == "955") return ArchitectureSpec::srcnn_ex_955(scale);
  } else if (family == "transition") {
    if (args == "1") return ArchitectureSpec::transition_1(scale);
    if (args == "2") return ArchitectureSpec::transition_2(scale);
  } else if (family == "fsrcnn") {
    std::size_t v[3] = {0, 0, 0};
    const char* p = args.data();
    const char* end = args.data() + args.size();
    for (int i = 0; i < 3; ++i) {
      auto [next, ec] = std::from_chars(p, end, v[i]);
      if (ec != std::errc{} || next == p) throw SpecError("bad FSRCNN triple '" + args + "'");
      p = next;
      if (i < 2) {
        if (p == end || *p != ',') throw SpecError("bad FSRCNN triple '" + args + "'");
        ++p;
      }
    }
    if (p != end) throw SpecError("bad FSRCNN triple '" + args + "'");
    return ArchitectureSpec::fsrcnn(v[0], v[1], v[2], scale);
  }
  throw SpecError("unknown architecture '" + text + "'");
}

// ---------------------------------------------------------------------------
// Accounting

std::size_t count_parameters(const ArchitectureSpec& spec, bool include_bias_and_prelu) {
  std::size_t total = 0;
  for (const LayerSpec& l : spec.layers) {
    if (l.weighted()) {
      total += l.filter * l.filter * l.filters * l.channels;
      if (include_bias_and_prelu) total += l.filters;
    } else if (l.kind == LayerKind::PReLU && include_bias_and_prelu) {
      total += l.channels;
    }
  }
  return total;
}

double macs_per_lr_pixel(const ArchitectureSpec& spec) {
  const double per_pixel = static_cast<double>(count_parameters(spec, false));
  // SRCNN-style nets run on the bicubic-upscaled image: S_HR = n^2 S_LR.
  if (!spec.upsamples()) return per_pixel * static_cast<double>(spec.scale * spec.scale);
  return per_pixel;
}

double estimate_cost(const ArchitectureSpec& spec, double lr_pixels) {
  if (!(lr_pixels > 0)) throw DomainError("estimate_cost: lr_size must be positive");
  return macs_per_lr_pixel(spec) * lr_pixels;
}

double speedup(const ArchitectureSpec& reference, const ArchitectureSpec& spec) {
  return macs_per_lr_pixel(reference) / macs_per_lr_pixel(spec);
}

// ---------------------------------------------------------------------------
// Model

Model::Model(ArchitectureSpec spec, std::vector<Layer> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)), frozen_(layers_.size(), false) {
  if (layers_.size() != spec_.layers.size()) {
    throw SpecError("model has " + std::to_string(layers_.size()) + " layers, spec lists " +
                    std::to_string(spec_.layers.size()));
  }
}

Tensor Model::forward(const Tensor& input) const {
  Tensor x = input;
  for (const Layer& layer : layers_) {
    x = std::visit([&](const auto& l) { return l.forward(x); }, layer);
  }
  return x;
}

Activations Model::forward_trace(const Tensor& input) const {
  Activations trace;
  trace.reserve(layers_.size() + 1);
  trace.push_back(input);
  for (const Layer& layer : layers_) {
    trace.push_back(std::visit([&](const auto& l) { return l.forward(trace.back()); }, layer));
  }
  return trace;
}

Tensor Model::features(const Tensor& input) const {
  Tensor x = input;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    x = std::visit([&](const auto& l) { return l.forward(x); }, layers_[i]);
  }
  return x;
}

std::vector<ParamBlock> Model::parameters() {
  std::vector<ParamBlock> blocks;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (auto* c = std::get_if<ConvLayer>(&layers_[i])) {
      blocks.push_back({c->weights.values(), ParamGroup::Conv, i});
      blocks.push_back({c->bias, ParamGroup::Conv, i});
    } else if (auto* d = std::get_if<DeconvLayer>(&layers_[i])) {
      blocks.push_back({d->weights.values(), ParamGroup::Deconv, i});
      blocks.push_back({d->bias, ParamGroup::Deconv, i});
    } else if (auto* p = std::get_if<PReLULayer>(&layers_[i]); p && p->learnable) {
      blocks.push_back({p->slopes, ParamGroup::PReLU, i});
    }
  }
  return blocks;
}

std::vector<std::vector<float>> Model::backward(const Activations& trace,
                                                const Tensor& grad_output) const {
  if (trace.size() != layers_.size() + 1) throw ShapeError("backward: trace length mismatch");
  require_same_shape(trace.back(), grad_output, "model backward");

  // Layers before the first trainable one need no input gradient.
  std::size_t first_needed = layers_.size();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!frozen_[i]) {
      first_needed = i;
      break;
    }
  }

  std::vector<std::vector<std::vector<float>>> per_layer(layers_.size());
  Tensor grad = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Tensor& input = trace[i];
    if (i < first_needed) break;
    if (const auto* c = std::get_if<ConvLayer>(&layers_[i])) {
      ConvGrads g = c->backward(input, grad);
      per_layer[i] = {g.grad_w.flatten(), std::move(g.grad_b)};
      grad = std::move(g.grad_in);
    } else if (const auto* d = std::get_if<DeconvLayer>(&layers_[i])) {
      ConvGrads g = d->backward(input, grad);
      per_layer[i] = {g.grad_w.flatten(), std::move(g.grad_b)};
      grad = std::move(g.grad_in);
    } else {
      const auto& p = std::get<PReLULayer>(layers_[i]);
      PReLUGrads g = p.backward(input, grad);
      if (p.learnable) per_layer[i] = {std::move(g.grad_a)};
      grad = std::move(g.grad_in);
    }
  }

  std::vector<std::vector<float>> grads;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::size_t blocks = 0;
    std::size_t sizes[2] = {0, 0};
    if (const auto* c = std::get_if<ConvLayer>(&layers_[i])) {
      blocks = 2;
      sizes[0] = c->weights.size();
      sizes[1] = c->bias.size();
    } else if (const auto* d = std::get_if<DeconvLayer>(&layers_[i])) {
      blocks = 2;
      sizes[0] = d->weights.size();
      sizes[1] = d->bias.size();
    } else if (const auto& p = std::get<PReLULayer>(layers_[i]); p.learnable) {
      blocks = 1;
      sizes[0] = p.slopes.size();
    }
    for (std::size_t b = 0; b < blocks; ++b) {
      if (per_layer[i].size() == blocks) {
        grads.push_back(std::move(per_layer[i][b]));
      } else {
        grads.emplace_back(sizes[b], 0.0f);  // skipped frozen prefix
      }
    }
  }
  return grads;
}

void Model::freeze_all_but_deconv() {
  const std::size_t deconv = deconv_index();
  for (std::size_t i = 0; i < layers_.size(); ++i) frozen_[i] = i != deconv;
}

std::size_t Model::deconv_index() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (std::holds_alternative<DeconvLayer>(layers_[i])) return i;
  }
  throw SpecError(spec_.name() + " has no deconvolution layer");
}

namespace {

Layer make_layer(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::Conv: return ConvLayer(l.channels, l.filters, l.filter);
    case LayerKind::Deconv:
      return DeconvLayer(l.channels, l.filters, WindowGeometry{l.filter, l.stride, l.filter / 2});
    case LayerKind::PReLU: return PReLULayer(l.channels, 0.0f, true);
    case LayerKind::ReLU: return PReLULayer(l.channels, 0.0f, false);
  }
  throw SpecError("unknown layer kind");
}

void init_deconv(DeconvLayer& layer, float stddev, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, stddev);
  for (float& w : layer.weights.values()) w = dist(rng);
  std::fill(layer.bias.begin(), layer.bias.end(), 0.0f);
}

}  // namespace

Model build(const ArchitectureSpec& spec, const InitPolicy& init, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(seed);
  const float a = spec.upsamples() ? init.prelu_slope : 0.0f;
  std::vector<Layer> layers;
  layers.reserve(spec.layers.size());
  for (const LayerSpec& l : spec.layers) {
    Layer layer = make_layer(l);
    if (auto* c = std::get_if<ConvLayer>(&layer)) {
      const double fan_in = static_cast<double>(l.filter * l.filter * l.channels);
      const auto stddev = static_cast<float>(std::sqrt(2.0 / ((1.0 + a * a) * fan_in)));
      std::normal_distribution<float> dist(0.0f, stddev);
      for (float& w : c->weights.values()) w = dist(rng);
    } else if (auto* d = std::get_if<DeconvLayer>(&layer)) {
      init_deconv(*d, init.deconv_stddev, rng);
    } else if (auto* p = std::get_if<PReLULayer>(&layer); p->learnable) {
      std::fill(p->slopes.begin(), p->slopes.end(), init.prelu_slope);
    }
    layers.push_back(std::move(layer));
  }
  return Model(spec, std::move(layers));
}

Model transplant_conv_layers(const Model& src, std::size_t target_scale, std::uint64_t seed,
                             const InitPolicy& init) {
  const ArchitectureSpec& s = src.spec();
  if (s.kind != ArchKind::Fsrcnn) {
    throw SpecError("transplant requires an FSRCNN source, got " + s.name());
  }
  ArchitectureSpec target = ArchitectureSpec::fsrcnn(s.d, s.s, s.m, target_scale);
  std::vector<Layer> layers = src.layers();
  const std::size_t di = src.deconv_index();
  const auto& old = std::get<DeconvLayer>(layers[di]);
  DeconvLayer fresh(old.in_channels(), old.out_channels(),
                    WindowGeometry{old.geometry.kernel, target_scale, old.geometry.pad});
  std::mt19937_64 rng(seed);
  init_deconv(fresh, init.deconv_stddev, rng);
  layers[di] = std::move(fresh);
  Model out(std::move(target), std::move(layers));
  out.freeze_all_but_deconv();
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[4] = {'F', 'S', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32s(std::span<const float> values) {
    for (float f : values) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      u32(bits);
    }
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("truncated weight stream", pos_);
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  void f32s(std::span<float> out) {
    need(4 * out.size());
    for (float& f : out) {
      const std::uint32_t bits = u32();
      std::memcpy(&f, &bits, 4);
    }
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

struct LayerHeader {
  LayerKind kind;
  std::uint32_t dims[4];
};

LayerHeader header_of(const Layer& layer) {
  if (const auto* c = std::get_if<ConvLayer>(&layer)) {
    return {LayerKind::Conv,
            {static_cast<std::uint32_t>(c->out_channels()),
             static_cast<std::uint32_t>(c->in_channels()),
             static_cast<std::uint32_t>(c->geometry.kernel),
             static_cast<std::uint32_t>(c->geometry.stride)}};
  }
  if (const auto* d = std::get_if<DeconvLayer>(&layer)) {
    return {LayerKind::Deconv,
            {static_cast<std::uint32_t>(d->in_channels()),
             static_cast<std::uint32_t>(d->out_channels()),
             static_cast<std::uint32_t>(d->geometry.kernel),
             static_cast<std::uint32_t>(d->geometry.stride)}};
  }
  const auto& p = std::get<PReLULayer>(layer);
  return {p.learnable ? LayerKind::PReLU : LayerKind::ReLU,
          {static_cast<std::uint32_t>(p.channels()), 1, 1, 1}};
}

}  // namespace

std::vector<std::uint8_t> save(const Model& model) {
  const ArchitectureSpec& spec = model.spec();
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(spec.kind));
  w.u32(static_cast<std::uint32_t>(spec.d));
  w.u32(static_cast<std::uint32_t>(spec.s));
  w.u32(static_cast<std::uint32_t>(spec.m));
  w.u32(static_cast<std::uint32_t>(spec.scale));
  for (const Layer& layer : model.layers()) {
    const LayerHeader h = header_of(layer);
    w.u8(static_cast<std::uint8_t>(h.kind));
    for (std::uint32_t d : h.dims) w.u32(d);
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      w.f32s(c->weights.values());
      w.f32s(c->bias);
    } else if (const auto* d = std::get_if<DeconvLayer>(&layer)) {
      w.f32s(d->weights.values());
      w.f32s(d->bias);
    } else if (const auto& p = std::get<PReLULayer>(layer); p.learnable) {
      w.f32s(p.slopes);
    }
  }
  w.u32(crc32_of(w.bytes));
  return std::move(w.bytes);
}

Model load(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    const std::size_t at = r.pos();
    if (r.u8() != static_cast<std::uint8_t>(c)) throw FormatError("bad magic", at);
  }
  {
    const std::size_t at = r.pos();
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
      throw FormatError("unsupported version " + std::to_string(version), at);
    }
  }
  const std::size_t kind_at = r.pos();
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(ArchKind::Fsrcnn)) {
    throw FormatError("unknown architecture kind " + std::to_string(kind), kind_at);
  }
  const std::uint32_t d = r.u32(), s = r.u32(), m = r.u32(), n = r.u32();
  ArchitectureSpec spec;
  try {
    spec = ArchitectureSpec::make(static_cast<ArchKind>(kind), d, s, m, n);
  } catch (const SpecError& e) {
    throw FormatError(std::string("invalid architecture: ") + e.what(), kind_at);
  }

  std::vector<Layer> layers;
  for (const LayerSpec& ls : spec.layers) {
    Layer layer = make_layer(ls);
    const LayerHeader want = header_of(layer);
    const std::size_t at = r.pos();
    LayerHeader got{static_cast<LayerKind>(r.u8()), {}};
    for (std::uint32_t& v : got.dims) v = r.u32();
    if (got.kind != want.kind || !std::equal(std::begin(got.dims), std::end(got.dims),
                                             std::begin(want.dims))) {
      throw FormatError("layer header disagrees with architecture " + spec.name(), at);
    }
    if (auto* c = std::get_if<ConvLayer>(&layer)) {
      r.f32s(c->weights.values());
      r.f32s(c->bias);
    } else if (auto* dl = std::get_if<DeconvLayer>(&layer)) {
      r.f32s(dl->weights.values());
      r.f32s(dl->bias);
    } else if (auto& p = std::get<PReLULayer>(layer); p.learnable) {
      r.f32s(p.slopes);
    }
    layers.push_back(std::move(layer));
  }
  const std::size_t crc_at = r.pos();
  const std::uint32_t expected = crc32_of(bytes.first(crc_at));
  if (r.u32() != expected) throw FormatError("CRC32 mismatch", crc_at);
  if (r.pos() != bytes.size()) throw FormatError("trailing bytes after CRC32", r.pos());
  return Model(std::move(spec), std::move(layers));
}

void save_file(const Model& model, const std::string& path) {
  const std::vector<std::uint8_t> bytes = save(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

Model load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load(bytes);
}

std::uint32_t checksum(const Model& model) {
  const std::vector<std::uint8_t> bytes = save(model);
  return crc32_of(bytes);
}

}  // namespace fsrcnn
