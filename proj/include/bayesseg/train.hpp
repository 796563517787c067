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

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bayesseg/inference.hpp"
#include "bayesseg/losses.hpp"
#include "bayesseg/net.hpp"

namespace bayesseg {

struct TrainConfig {
  double lr_stage1 = 1e-4;
  double lr_curriculum = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-7;
  int batch_size = 12;
  int epochs_per_stage = 10;
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::kCrossEntropy;
  LossParams loss_params;

  /// Library-level checks: rates >= 0, epochs >= 0, batch >= 1.
  void validate() const;
};

/// One training example: a d x d input with its labels and, for the
/// uncertainty loss, the frozen normalized uncertainty of each pixel.
struct TrainSample {
  std::vector<double> image;
  std::vector<std::uint8_t> labels;
  std::vector<float> uncertainty;
};

using TileSet = std::vector<TrainSample>;

TileSet make_tiles(const LargeImage& image, const LabelMap& labels, std::span<const Tile> tiles,
                   const UncertaintyMap* uncertainty = nullptr);

/// Tiles of every image on its sliding-window grid.
TileSet grid_tiles(std::span<const LabeledImage> images, int tile_size, int stride,
                   std::span<const UncertaintyMap> uncertainty = {});

struct TrainHooks {
  std::function<void(int epoch, double train_loss, double val_loss)> on_epoch;
  std::function<void()> on_uncertainty_map;
};

/// Mean loss over a tile set with dropout disabled.
double evaluate_tiles(const ModelState& model, const TileSet& tiles, LossKind kind, const LossParams& params);

/// Minibatch ADAM over a tile set, tracking the lowest-validation-loss
/// checkpoint. State (moments, step count, shuffling stream) persists across
/// run_epochs calls.
class Trainer {
 public:
  Trainer(const ModelState& init, const TrainConfig& cfg, double learning_rate);

  /// Runs `epochs` passes over `train`; validation loss uses `kind`.
  void run_epochs(int epochs, const TileSet& train, const TileSet& val, LossKind kind, TrainHooks* hooks = nullptr);

  /// Forgets the best checkpoint so far; the next epoch becomes the best.
  void reset_best();

  /// Lowest-validation-loss checkpoint, rounded to float32. Before any epoch
  /// ran, the initial weights with an unset validation loss.
  ModelState best() const;

  const std::vector<double>& live_params() const { return params_; }
  int epochs_run() const { return epochs_run_; }

 private:
  double train_epoch(const TileSet& train, LossKind kind);

  ModelState init_;
  TrainConfig cfg_;
  double lr_;
  UNet net_;
  std::vector<double> params_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t step_ = 0;
  Rng rng_;
  std::vector<double> best_params_;
  double best_loss_;
  int epochs_run_ = 0;
};

/// One learning stage: `cfg.epochs_per_stage` epochs of `cfg.loss_kind` at
/// `learning_rate`, returning the best validation checkpoint.
ModelState train_stage(const ModelState& model, const TileSet& train, const TileSet& val, const TrainConfig& cfg,
                       double learning_rate, TrainHooks* hooks = nullptr);

/// Single-stage training with the uncertainty loss: the first half of the
/// epochs use cross-entropy; the uncertainty map of every training and
/// validation image is then computed once and frozen, and the remaining
/// epochs minimize cross-entropy plus the uncertainty-weighted entropy term.
/// The returned checkpoint is the best of the second phase.
ModelState train_method2(const ModelState& model, std::span<const LabeledImage> train_images,
                         std::span<const LabeledImage> val_images, const TrainConfig& cfg,
                         const InferenceConfig& inference, TrainHooks* hooks = nullptr);

}  // namespace bayesseg
