#include "camboost/network.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "binary_io.hpp"
#include "camboost/error.hpp"
#include "camboost/ops.hpp"

namespace camboost {

namespace detail {

void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace detail

void NetConfig::validate() const {
  if (in_channels == 0 || height == 0 || width == 0) throw ValueError("network input has a zero-sized dimension");
  if (num_classes == 0) throw ValueError("network needs at least one class");
  if (conv_channels.empty()) throw ValueError("network needs at least one conv layer");
  for (auto c : conv_channels) {
    if (c == 0) throw ValueError("conv layer with zero output channels");
  }
  if (kernel_size == 0 || kernel_size % 2 == 0) throw ValueError("kernel size must be odd");
}

std::span<const double> Cam::channel(std::size_t c) const {
  const std::size_t hw = scores.dim(1) * scores.dim(2);
  return scores.data().subspan(c * hw, hw);
}

CamNet::CamNet(NetConfig config) : config_(std::move(config)) {
  config_.validate();
  std::size_t cin = config_.in_channels;
  const auto k = config_.kernel_size;
  for (const auto cout : config_.conv_channels) {
    ConvLayer layer;
    layer.kernel = Tensor(Shape{cout, cin, k, k});
    layer.bias = Tensor(Shape{cout});
    layer.kernel.set_requires_grad(true);
    layer.bias.set_requires_grad(true);
    convs_.push_back(std::move(layer));
    cin = cout;
  }
  head_weight_ = Tensor(Shape{config_.num_classes, cin});
  head_weight_.set_requires_grad(true);
  if (config_.head_bias) {
    head_bias_ = Tensor(Shape{config_.num_classes});
    head_bias_.set_requires_grad(true);
  }
}

std::size_t CamNet::feature_channels() const { return config_.conv_channels.back(); }

std::vector<Tensor*> CamNet::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : convs_) {
    out.push_back(&l.kernel);
    out.push_back(&l.bias);
  }
  out.push_back(&head_weight_);
  if (config_.head_bias) out.push_back(&head_bias_);
  return out;
}

std::vector<const Tensor*> CamNet::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto* p : const_cast<CamNet*>(this)->parameters()) out.push_back(p);
  return out;
}

std::size_t CamNet::body_parameter_count() const { return 2 * convs_.size(); }

void CamNet::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

bool CamNet::same_weights(const CamNet& other) const {
  const auto a = parameters();
  const auto b = other.parameters();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i]->same_values(*b[i])) return false;
  }
  return true;
}

std::size_t CamNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->size();
  return n;
}

CamNet init_net(const NetConfig& config, std::uint64_t seed) {
  CamNet net(config);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Tensor& t, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data()) v = dist(rng);
  };
  for (auto& layer : net.conv_layers()) {
    fill(layer.kernel, layer.kernel.dim(1) * layer.kernel.dim(2) * layer.kernel.dim(3));
  }
  fill(net.head_weight(), net.head_weight().dim(1));
  return net;
}

namespace {

void check_input(const CamNet& net, const Tensor& x) {
  if (x.shape() != net.input_shape()) {
    throw DimensionError("network expects input " + shape_string(net.input_shape()) + ", got " +
                         shape_string(x.shape()));
  }
}

}  // namespace

Tensor forward_features(const CamNet& net, const Tensor& x) {
  check_input(net, x);
  Tensor h = x;
  for (const auto& layer : net.conv_layers()) {
    h = ops::conv2d(h, layer.kernel, layer.bias);
    if (layer.relu) h = ops::relu(h);
  }
  return h;
}

Cam forward_cam(const CamNet& net, const Tensor& x) {
  const Tensor features = forward_features(net, x);
  return Cam{ops::pointwise_conv(features, net.head_weight(), net.head_bias()), {}};
}

Cam cam_posthoc(const Tensor& features, const Tensor& head_weight, const Tensor& head_bias) {
  if (features.rank() != 3 || head_weight.rank() != 2 || head_weight.dim(1) != features.dim(0)) {
    throw DimensionError("cam_posthoc: features " + shape_string(features.shape()) + " incompatible with head " +
                         shape_string(head_weight.shape()));
  }
  const auto c_count = head_weight.dim(0);
  if (!head_bias.empty() && head_bias.size() != c_count) {
    throw DimensionError("cam_posthoc: bias length does not match head rows");
  }
  const auto d_count = features.dim(0);
  const auto h = features.dim(1);
  const auto w = features.dim(2);
  Tensor m(Shape{c_count, h, w});
  for (std::size_t c = 0; c < c_count; ++c) {
    const double b = head_bias.empty() ? 0.0 : head_bias[c];
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        double acc = 0.0;
        for (std::size_t d = 0; d < d_count; ++d) acc += head_weight[c * d_count + d] * features.at(d, i, j);
        m.at(c, i, j) = acc + b;
      }
    }
  }
  return Cam{std::move(m), {}};
}

Tensor logits_from_cam(const Cam& cam, const std::optional<BoostParams>& boost, const std::vector<bool>& boost_channels) {
  if (!boost) return ops::global_average_pool(cam.scores);
  return ops::global_average_pool(boostlu_map(cam.scores, *boost, boost_channels));
}

Tensor forward_logits(const CamNet& net, const Tensor& x, const std::optional<BoostParams>& boost,
                      const std::vector<bool>& boost_channels) {
  return logits_from_cam(forward_cam(net, x), boost, boost_channels);
}

NetVars bind_parameters(Tape& tape, CamNet& net) {
  NetVars vars;
  for (auto& layer : net.conv_layers()) {
    vars.convs.emplace_back(tape.parameter(layer.kernel), tape.parameter(layer.bias));
  }
  vars.head_weight = tape.parameter(net.head_weight());
  if (net.config().head_bias) vars.head_bias = tape.parameter(net.head_bias());
  return vars;
}

Var forward_cam(Tape& tape, const CamNet& net, const NetVars& vars, Var x) {
  check_input(net, tape.value(x));
  Var h = x;
  for (std::size_t i = 0; i < vars.convs.size(); ++i) {
    h = conv2d(tape, h, vars.convs[i].first, vars.convs[i].second);
    if (net.conv_layers()[i].relu) h = relu(tape, h);
  }
  return vars.head_bias ? pointwise_conv(tape, h, vars.head_weight, *vars.head_bias)
                        : pointwise_conv(tape, h, vars.head_weight);
}

Var forward_logits(Tape& tape, const CamNet& net, const NetVars& vars, Var x, const std::optional<BoostParams>& boost,
                   const std::vector<bool>& boost_channels) {
  Var cam = forward_cam(tape, net, vars, x);
  if (boost) cam = boostlu_map(tape, cam, *boost, boost_channels);
  return global_average_pool(tape, cam);
}

namespace {

constexpr std::string_view kCheckpointMagic = "CAMBCKPT";
constexpr std::uint32_t kCheckpointVersion = 1;

void write_tensor(detail::ByteWriter& w, const Tensor& t) {
  w.u64(t.rank());
  for (auto d : t.shape()) w.u64(d);
  w.f64s(t.data());
}

void read_tensor_into(detail::ByteReader& r, Tensor& t) {
  const auto rank = r.u64();
  Shape shape(rank);
  for (auto& d : shape) d = r.u64();
  if (shape != t.shape()) {
    throw FormatError("checkpoint tensor shape " + shape_string(shape) + " does not match architecture " +
                      shape_string(t.shape()));
  }
  r.f64s(t.data());
}

}  // namespace

std::vector<char> encode_checkpoint(const CamNet& net) {
  detail::ByteWriter w;
  const auto& cfg = net.config();
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u64(cfg.in_channels);
  w.u64(cfg.height);
  w.u64(cfg.width);
  w.u64(cfg.kernel_size);
  w.u64(cfg.num_classes);
  w.u8(cfg.head_bias ? 1 : 0);
  w.u64(net.conv_layers().size());
  for (const auto& layer : net.conv_layers()) {
    w.u64(layer.kernel.dim(0));
    w.u8(layer.relu ? 1 : 0);
  }
  for (const auto* p : net.parameters()) write_tensor(w, *p);
  return w.bytes();
}

CamNet decode_checkpoint(std::span<const char> bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  r.expect_magic(kCheckpointMagic);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  NetConfig cfg;
  cfg.in_channels = r.u64();
  cfg.height = r.u64();
  cfg.width = r.u64();
  cfg.kernel_size = r.u64();
  cfg.num_classes = r.u64();
  cfg.head_bias = r.u8() != 0;
  const auto layers = r.u64();
  if (layers == 0 || layers > 1024) throw FormatError("checkpoint: implausible layer count");
  cfg.conv_channels.clear();
  std::vector<bool> relu_flags;
  for (std::uint64_t i = 0; i < layers; ++i) {
    cfg.conv_channels.push_back(r.u64());
    relu_flags.push_back(r.u8() != 0);
  }
  CamNet net(cfg);
  for (std::size_t i = 0; i < relu_flags.size(); ++i) net.conv_layers()[i].relu = relu_flags[i];
  for (auto* p : net.parameters()) read_tensor_into(r, *p);
  r.expect_end();
  return net;
}

void save_checkpoint(const CamNet& net, const std::filesystem::path& path) {
  detail::write_file(path, encode_checkpoint(net));
}

CamNet load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(detail::read_file(path)); }

}  // namespace camboost
