#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "camboost/error.hpp"
#include "camboost/losses.hpp"
#include "camboost/network.hpp"
#include "camboost/ops.hpp"
#include "oracles.hpp"

using namespace camboost;

namespace {

NetConfig small_config() {
  NetConfig c;
  c.height = 8;
  c.width = 8;
  c.conv_channels = {4, 6};
  c.num_classes = 3;
  return c;
}

}  // namespace

TEST(CamPosthoc, ConstantChannelsWeightedSum) {
  Tensor f(Shape{2, 3, 3});
  for (std::size_t p = 0; p < 9; ++p) {
    f[p] = 1.0;
    f[9 + p] = 2.0;
  }
  const Tensor w(Shape{1, 2}, {0.5, 0.25});
  const Cam cam = cam_posthoc(f, w, Tensor(Shape{1}, 0.0));
  for (double v : cam.scores.data()) EXPECT_EQ(v, 1.0);
}

TEST(CamPosthoc, IdentityWeightsAndBiasOnly) {
  std::mt19937_64 rng(2);
  const Tensor f = oracle::random_tensor({3, 4, 4}, rng);
  Tensor eye(Shape{3, 3}, 0.0);
  for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
  const Cam same = cam_posthoc(f, eye, Tensor(Shape{3}, 0.0));
  EXPECT_TRUE(same.scores.same_values(f));

  const Cam bias_only = cam_posthoc(f, Tensor(Shape{2, 3}, 0.0), Tensor(Shape{2}, {0.7, -1.2}));
  for (std::size_t p = 0; p < 16; ++p) {
    EXPECT_EQ(bias_only.channel(0)[p], 0.7);
    EXPECT_EQ(bias_only.channel(1)[p], -1.2);
  }
  EXPECT_THROW(cam_posthoc(f, Tensor(Shape{2, 4}), Tensor(Shape{2})), DimensionError);
}

TEST(ForwardCam, ZeroInputZeroBiasesGivesZeroMap) {
  const CamNet net = init_net(small_config(), 9);
  const Cam cam = forward_cam(net, Tensor(net.input_shape(), 0.0));
  for (double v : cam.scores.data()) EXPECT_EQ(v, 0.0);
}

TEST(ForwardCam, MatchesPosthocAndLogitsAreSpatialMeans) {
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CamNet net = init_net(small_config(), seed);
    const Tensor x = oracle::random_tensor(net.input_shape(), rng);
    const Cam cam = forward_cam(net, x);
    const Cam ref = cam_posthoc(forward_features(net, x), net.head_weight(), net.head_bias());
    for (std::size_t i = 0; i < cam.scores.size(); ++i) EXPECT_NEAR(cam.scores[i], ref.scores[i], 1e-10);
    const Tensor logits = forward_logits(net, x, std::nullopt);
    for (std::size_t c = 0; c < net.num_classes(); ++c) {
      double s = 0;
      for (double v : cam.channel(c)) s += v;
      EXPECT_NEAR(logits[c], s / 64.0, 1e-10);
    }
  }
}

TEST(LogitsFromCam, BoostRaisesPositiveMass) {
  Cam cam{Tensor(Shape{1, 2, 2}, {1, -1, -1, 1}), {}};
  EXPECT_EQ(logits_from_cam(cam, std::nullopt)[0], 0.0);
  EXPECT_EQ(logits_from_cam(cam, BoostParams{5.0, 0.0})[0], 2.0);
  EXPECT_EQ(logits_from_cam(cam, BoostParams{1.0, 0.0})[0], 0.0);
}

TEST(LogitsFromCam, BoostedLogitNeverBelowUnboosted) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    Cam cam{oracle::random_tensor({3, 5, 5}, rng), {}};
    const Tensor plain = logits_from_cam(cam, std::nullopt);
    const Tensor boosted = logits_from_cam(cam, BoostParams{3.0, 0.0});
    for (std::size_t c = 0; c < 3; ++c) EXPECT_GE(boosted[c], plain[c]);
  }
}

TEST(LogitsFromCam, DisabledChannelsPassThrough) {
  Cam cam{Tensor(Shape{2, 1, 2}, {1, -1, 2, 0}), {}};
  const Tensor l = logits_from_cam(cam, BoostParams{5.0, 0.0}, {false, true});
  EXPECT_EQ(l[0], 0.0);
  EXPECT_EQ(l[1], 5.0);
}

TEST(InitNet, DeterministicAndSeedSensitive) {
  const CamNet a = init_net(small_config(), 17);
  const CamNet b = init_net(small_config(), 17);
  const CamNet c = init_net(small_config(), 18);
  EXPECT_TRUE(a.same_weights(b));
  EXPECT_FALSE(a.same_weights(c));
}

TEST(InitNet, UniformFanInScaleAndZeroBiases) {
  const CamNet net = init_net(NetConfig{}, 1);
  const auto& k = net.conv_layers()[1].kernel;  // fan-in 16 * 9
  const double bound = 1.0 / std::sqrt(144.0);
  double mean = 0, sq = 0;
  for (double v : k.data()) {
    EXPECT_LE(std::abs(v), bound);
    mean += v;
    sq += v * v;
  }
  const double n = static_cast<double>(k.size());
  mean /= n;
  const double var = sq / n - mean * mean;
  // uniform variance bound^2/3; std error of the mean bound/sqrt(3n)
  EXPECT_LT(std::abs(mean), 4.0 * bound / std::sqrt(3.0 * n));
  EXPECT_NEAR(var, bound * bound / 3.0, 0.1 * bound * bound / 3.0);
  for (const auto& layer : net.conv_layers())
    for (double v : layer.bias.data()) EXPECT_EQ(v, 0.0);
  for (double v : net.head_bias().data()) EXPECT_EQ(v, 0.0);
}

TEST(InitNet, ZeroSizedLayerRejected) {
  NetConfig c = small_config();
  c.conv_channels = {4, 0};
  EXPECT_THROW(init_net(c, 0), Error);
  c = small_config();
  c.num_classes = 0;
  EXPECT_THROW(init_net(c, 0), Error);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const CamNet net = init_net(small_config(), 3);
  const auto bytes = encode_checkpoint(net);
  const CamNet back = decode_checkpoint(bytes);
  EXPECT_TRUE(net.same_weights(back));
  EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(Checkpoint, CorruptionIsFormatError) {
  auto bytes = encode_checkpoint(init_net(small_config(), 3));
  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  EXPECT_THROW(decode_checkpoint(truncated), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), FormatError);
}

// Full network with the assume-negative loss against central differences.
TEST(NetworkGradient, AssumeNegativeLossMatchesFiniteDifferences) {
  NetConfig cfg = small_config();
  cfg.height = 6;
  cfg.width = 6;
  CamNet net = init_net(cfg, 5);
  std::mt19937_64 rng(5);
  const Tensor x = oracle::random_tensor(net.input_shape(), rng);
  const LabelVector labels({LabelState::Positive, LabelState::Unannotated, LabelState::Negative});

  net.zero_grad();
  Tape tape;
  const NetVars vars = bind_parameters(tape, net);
  const Var logits = forward_logits(tape, net, vars, tape.constant(x), std::nullopt);
  tape.backward(an_loss(tape, logits, labels));

  auto f = [&] { return an_loss(forward_logits(net, x, std::nullopt).data(), labels); };
  std::uniform_int_distribution<std::size_t> pick;
  double worst = 0;
  for (Tensor* p : net.parameters()) {
    for (int s = 0; s < 10; ++s) {
      const std::size_t i = pick(rng) % p->size();
      const double fd = oracle::central_difference(f, *p, i);
      worst = std::max(worst, oracle::relative_error(p->grad()[i], fd));
    }
  }
  EXPECT_LE(worst, 1e-4);
}
