#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camboost/boostlu.hpp"
#include "camboost/tape.hpp"
#include "camboost/tensor.hpp"

namespace camboost {

struct NetConfig {
  std::size_t in_channels = 1;
  std::size_t height = 32;
  std::size_t width = 32;
  std::vector<std::size_t> conv_channels{16, 32};
  std::size_t kernel_size = 3;
  std::size_t num_classes = 6;
  bool head_bias = true;

  void validate() const;
};

struct ConvLayer {
  Tensor kernel;  // Cout x Cin x k x k
  Tensor bias;    // Cout
  bool relu = true;
};

/// Per-class spatial attribution map. The spatial mean of channel c is the
/// unboosted logit of class c.
struct Cam {
  Tensor scores;  // C x H x W
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return scores.dim(0); }
  std::size_t height() const { return scores.dim(1); }
  std::size_t width() const { return scores.dim(2); }
  std::span<const double> channel(std::size_t c) const;
};

/// Convolutional stack followed by a 1x1 head whose output is the CAM.
/// Logits are spatial means of the (optionally boosted) CAM.
class CamNet {
 public:
  CamNet() = default;
  explicit CamNet(NetConfig config);

  const NetConfig& config() const noexcept { return config_; }
  std::size_t num_classes() const noexcept { return config_.num_classes; }
  Shape input_shape() const { return {config_.in_channels, config_.height, config_.width}; }
  std::size_t feature_channels() const;

  std::vector<ConvLayer>& conv_layers() noexcept { return convs_; }
  const std::vector<ConvLayer>& conv_layers() const noexcept { return convs_; }
  Tensor& head_weight() noexcept { return head_weight_; }
  const Tensor& head_weight() const noexcept { return head_weight_; }
  Tensor& head_bias() noexcept { return head_bias_; }
  const Tensor& head_bias() const noexcept { return head_bias_; }

  /// All trainable tensors in a fixed order (conv kernels/biases, then head).
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  /// Number of leading entries of parameters() that belong to the body.
  std::size_t body_parameter_count() const;

  void zero_grad();
  bool same_weights(const CamNet& other) const;
  std::size_t parameter_count() const;

 private:
  NetConfig config_;
  std::vector<ConvLayer> convs_;
  Tensor head_weight_;  // C x D
  Tensor head_bias_;    // C, empty when config.head_bias is false
};

/// Zero-mean uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
CamNet init_net(const NetConfig& config, std::uint64_t seed);

/// Output of the last conv layer (input to the head).
Tensor forward_features(const CamNet& net, const Tensor& x);
Cam forward_cam(const CamNet& net, const Tensor& x);
/// Explicit weighted channel sum of `features` with the head weights.
Cam cam_posthoc(const Tensor& features, const Tensor& head_weight, const Tensor& head_bias);
/// GAP of the CAM, or of the boosted CAM when `boost` is set.
Tensor forward_logits(const CamNet& net, const Tensor& x, const std::optional<BoostParams>& boost,
                      const std::vector<bool>& boost_channels = {});
Tensor logits_from_cam(const Cam& cam, const std::optional<BoostParams>& boost,
                       const std::vector<bool>& boost_channels = {});

/// Parameters of a CamNet bound to a tape for one step.
struct NetVars {
  std::vector<std::pair<Var, Var>> convs;
  Var head_weight;
  std::optional<Var> head_bias;
};

NetVars bind_parameters(Tape& tape, CamNet& net);
Var forward_cam(Tape& tape, const CamNet& net, const NetVars& vars, Var x);
Var forward_logits(Tape& tape, const CamNet& net, const NetVars& vars, Var x, const std::optional<BoostParams>& boost,
                   const std::vector<bool>& boost_channels = {});

void save_checkpoint(const CamNet& net, const std::filesystem::path& path);
CamNet load_checkpoint(const std::filesystem::path& path);
std::vector<char> encode_checkpoint(const CamNet& net);
CamNet decode_checkpoint(std::span<const char> bytes);

}  // namespace camboost
