/* Copyright 2026 The bayesseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bayesseg/random.hpp"

namespace bayesseg {

/// Activations: one row per channel, one column per pixel (row-major).
using Activation = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Class probabilities: C rows, one column per pixel (column-major, so each
/// pixel's pmf is contiguous).
using PixelProbs = Eigen::MatrixXd;

struct NetConfig {
  int depth = 4;
  int base_channels = 16;
  double dropout_rate = 0.5;
  int num_classes = 3;
  int tile_size = 160;

  void validate() const;
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  std::size_t fan_in() const { return static_cast<std::size_t>(in_channels) * kernel * kernel; }
};

struct BlockTape {
  Activation col1, act1, col2, act2, mask;
  int height = 0;
  int width = 0;
};

/// Intermediate values kept by a forward pass for backpropagation.
struct Tape {
  std::vector<BlockTape> encoder;
  std::vector<Activation> skips;
  std::vector<std::vector<Eigen::Index>> pool_argmax;
  BlockTape bottleneck;
  std::vector<BlockTape> decoder;  // indexed by level
  Activation head_in;
  PixelProbs probs;
};

/// Encoder-decoder with skip connections. Each level is a block of two 3x3
/// convolutions with ReLU followed by dropout; the encoder halves resolution
/// with 2x2 max pooling and the decoder doubles it with nearest-neighbour
/// upsampling before concatenating the matching skip. A 1x1 convolution and
/// a softmax produce the per-pixel class pmf.
///
/// Parameters live in one flat array, ordered: encoder levels 0..depth-1,
/// bottleneck, decoder levels depth-1..0, head. Each block stores conv1
/// weights, conv1 bias, conv2 weights, conv2 bias; weights are laid out as
/// [out][in][ky][kx].
class UNet {
 public:
  explicit UNet(const NetConfig& cfg);

  const NetConfig& config() const { return cfg_; }
  std::size_t num_params() const { return num_params_; }
  const std::vector<ConvSpec>& convs() const { return convs_; }

  /// He-normal weights, zero biases.
  std::vector<double> init_params(std::uint64_t seed) const;

  /// Runs the network on a d*d input. `dropout` == nullptr disables dropout.
  PixelProbs forward(std::span<const double> params, std::span<const double> input, Rng* dropout) const;
  PixelProbs forward(std::span<const double> params, std::span<const double> input, Rng* dropout,
                     Tape& tape) const;

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(probs).
  void backward(std::span<const double> params, const Tape& tape, const PixelProbs& dprobs,
                std::span<double> grad) const;

 private:
  struct Block {
    ConvSpec conv1;
    ConvSpec conv2;
  };

  Activation block_forward(std::span<const double> params, const Block& b, const Activation& x, int h, int w,
                           Rng* dropout, BlockTape* tape) const;
  Activation block_backward(std::span<const double> params, const Block& b, const BlockTape& tape,
                            const Activation& dy, std::span<double> grad) const;

  NetConfig cfg_;
  std::vector<Block> encoder_;
  Block bottleneck_;
  std::vector<Block> decoder_;  // indexed by level
  ConvSpec head_;
  std::vector<ConvSpec> convs_;
  std::size_t num_params_ = 0;
};

/// Trained weights plus what is needed to reproduce their predictions.
struct ModelState {
  NetConfig config;
  std::vector<double> params;
  std::uint64_t seed = 0;
  double val_loss_best = std::numeric_limits<double>::infinity();

  static ModelState initialize(const NetConfig& cfg, std::uint64_t seed);

  UNet net() const { return UNet(config); }

  /// Rounds parameters to float32 so the in-memory model equals its
  /// serialized form.
  void quantize();
};

/// "BNET1 key=value ...\n" header followed by the parameters as float32 LE.
std::string encode_model(const ModelState& model);
ModelState decode_model(std::string_view bytes);
void save_model(const std::filesystem::path& path, const ModelState& model);
ModelState load_model(const std::filesystem::path& path);

/// Seed of the t-th Monte Carlo sample of a prediction seeded with `seed`.
inline std::uint64_t mc_sample_seed(std::uint64_t seed, int t) {
  return derive_seed(seed, static_cast<std::uint64_t>(t));
}

/// One stochastic forward pass with dropout masks drawn from `sample_seed`.
PixelProbs mc_sample(const ModelState& model, const UNet& net, std::span<const double> sub_image,
                     std::uint64_t sample_seed);

/// Monte Carlo predictive mean over `samples` dropout passes. With
/// `stochastic` false, dropout is disabled and every pass is identical.
PixelProbs mc_predict(const ModelState& model, std::span<const double> sub_image, int samples, std::uint64_t seed,
                      bool stochastic = true);

}  // namespace bayesseg
