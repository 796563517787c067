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

#include "bayesseg/train.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bayesseg {

void TrainConfig::validate() const {
  if (!(lr_stage1 >= 0.0) || !(lr_curriculum >= 0.0)) throw std::invalid_argument("learning rates must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("ADAM betas must lie in [0,1)");
  }
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("ADAM epsilon must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (epochs_per_stage < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!(loss_params.uncertainty_lambda >= 0.0)) throw std::invalid_argument("uncertainty lambda must be >= 0");
  if (!(loss_params.ss_weight >= 0.0 && loss_params.ss_weight <= 1.0)) {
    throw std::invalid_argument("SS weight must lie in [0,1]");
  }
}

TileSet make_tiles(const LargeImage& image, const LabelMap& labels, std::span<const Tile> tiles,
                   const UncertaintyMap* uncertainty) {
  if (!image.same_shape(labels)) throw std::invalid_argument("make_tiles: image and labels differ in shape");
  if (uncertainty && !image.same_shape(*uncertainty)) {
    throw std::invalid_argument("make_tiles: uncertainty map differs in shape");
  }
  TileSet out;
  out.reserve(tiles.size());
  for (const auto& t : tiles) {
    TrainSample s;
    s.image = tile_input(image, t);
    s.labels = extract(static_cast<const Plane<std::uint8_t>&>(labels), t).data;
    if (uncertainty) s.uncertainty = extract(*uncertainty, t).data;
    out.push_back(std::move(s));
  }
  return out;
}

TileSet grid_tiles(std::span<const LabeledImage> images, int tile_size, int stride,
                   std::span<const UncertaintyMap> uncertainty) {
  if (!uncertainty.empty() && uncertainty.size() != images.size()) {
    throw std::invalid_argument("grid_tiles: one uncertainty map per image required");
  }
  TileSet out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& im = images[i];
    const auto grid = build_grid(im.image.width, im.image.height, tile_size, stride);
    auto part = make_tiles(im.image, im.labels, grid.tiles, uncertainty.empty() ? nullptr : &uncertainty[i]);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

double evaluate_tiles(const ModelState& model, const TileSet& tiles, LossKind kind, const LossParams& params) {
  if (tiles.empty()) throw std::invalid_argument("evaluate_tiles: empty tile set");
  const UNet net(model.config);
  double sum = 0.0;
  for (const auto& s : tiles) {
    const auto probs = net.forward(model.params, s.image, nullptr);
    sum += evaluate_loss(kind, params, probs, s.labels, s.uncertainty);
  }
  const double mean = sum / static_cast<double>(tiles.size());
  if (!std::isfinite(mean)) {
    throw std::runtime_error("validation loss is not finite (" + std::to_string(mean) + ") for loss " +
                             to_string(kind));
  }
  return mean;
}

Trainer::Trainer(const ModelState& init, const TrainConfig& cfg, double learning_rate)
    : init_(init),
      cfg_(cfg),
      lr_(learning_rate),
      net_(init.config),
      params_(init.params),
      m_(init.params.size(), 0.0),
      v_(init.params.size(), 0.0),
      rng_(derive_seed(cfg.seed, 0x7A11)),
      best_params_(init.params),
      best_loss_(std::numeric_limits<double>::infinity()) {
  cfg_.validate();
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (params_.size() != net_.num_params()) throw std::invalid_argument("Trainer: parameter count mismatch");
}

void Trainer::reset_best() { best_loss_ = std::numeric_limits<double>::infinity(); }

double Trainer::train_epoch(const TileSet& train, LossKind kind) {
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng_);

  std::vector<double> grad(params_.size());
  Tape tape;
  PixelProbs dprobs;
  double loss_sum = 0.0;
  const auto batch = static_cast<std::size_t>(cfg_.batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t b = start; b < end; ++b) {
      const auto& s = train[order[b]];
      net_.forward(params_, s.image, &rng_, tape);
      const double loss = evaluate_loss(kind, cfg_.loss_params, tape.probs, s.labels, s.uncertainty, &dprobs);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("training loss is not finite at step " + std::to_string(step_ + 1) +
                                 " (loss " + to_string(kind) + ")");
      }
      loss_sum += loss;
      net_.backward(params_, tape, dprobs, grad);
    }
    const double inv = 1.0 / static_cast<double>(end - start);
    ++step_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const double g = grad[i] * inv;
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
      params_[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.adam_epsilon);
    }
  }
  return loss_sum / static_cast<double>(train.size());
}

void Trainer::run_epochs(int epochs, const TileSet& train, const TileSet& val, LossKind kind, TrainHooks* hooks) {
  if (train.empty() || val.empty()) throw std::invalid_argument("training needs non-empty training and validation tiles");
  ModelState probe = init_;
  for (int e = 0; e < epochs; ++e) {
    const double train_loss = train_epoch(train, kind);
    probe.params = params_;
    probe.quantize();  // score the weights best() would hand out
    const double val_loss = evaluate_tiles(probe, val, kind, cfg_.loss_params);
    ++epochs_run_;
    if (val_loss < best_loss_) {
      best_loss_ = val_loss;
      best_params_ = params_;
    }
    if (hooks && hooks->on_epoch) hooks->on_epoch(epochs_run_, train_loss, val_loss);
  }
}

ModelState Trainer::best() const {
  ModelState out = init_;
  out.params = best_params_;
  out.val_loss_best = best_loss_;
  out.quantize();
  return out;
}

ModelState train_stage(const ModelState& model, const TileSet& train, const TileSet& val, const TrainConfig& cfg,
                       double learning_rate, TrainHooks* hooks) {
  if (train.empty() || val.empty()) throw std::invalid_argument("training needs non-empty training and validation tiles");
  Trainer trainer(model, cfg, learning_rate);
  trainer.run_epochs(cfg.epochs_per_stage, train, val, cfg.loss_kind, hooks);
  if (cfg.epochs_per_stage == 0) {
    ModelState out = model;
    out.val_loss_best = evaluate_tiles(model, val, cfg.loss_kind, cfg.loss_params);
    return out;
  }
  return trainer.best();
}

ModelState train_method2(const ModelState& model, std::span<const LabeledImage> train_images,
                         std::span<const LabeledImage> val_images, const TrainConfig& cfg,
                         const InferenceConfig& inference, TrainHooks* hooks) {
  if (cfg.loss_kind != LossKind::kUncertainty) {
    throw std::invalid_argument("train_method2 requires the uncertainty loss");
  }
  if (cfg.epochs_per_stage < 2) throw std::invalid_argument("train_method2 needs at least 2 epochs");
  const int d = inference.tile_size;
  const int s = inference.stride;
  const TileSet train = grid_tiles(train_images, d, s);
  const TileSet val = grid_tiles(val_images, d, s);
  if (train.empty() || val.empty()) throw std::invalid_argument("training needs non-empty training and validation tiles");

  const int warmup = cfg.epochs_per_stage / 2;
  Trainer trainer(model, cfg, cfg.lr_stage1);
  trainer.run_epochs(warmup, train, val, LossKind::kCrossEntropy, hooks);

  // Freeze the uncertainty of the warmed-up network (live weights).
  ModelState warm = model;
  warm.params = trainer.live_params();
  auto frozen_maps = [&](std::span<const LabeledImage> images) {
    std::vector<UncertaintyMap> maps;
    maps.reserve(images.size());
    for (const auto& im : images) maps.push_back(uncertainty_map(predict_image(warm, im.image, inference),
                                                                 inference.normalization));
    return maps;
  };
  const auto train_maps = frozen_maps(train_images);
  const auto val_maps = frozen_maps(val_images);
  if (hooks && hooks->on_uncertainty_map) hooks->on_uncertainty_map();

  const TileSet train_u = grid_tiles(train_images, d, s, train_maps);
  const TileSet val_u = grid_tiles(val_images, d, s, val_maps);
  trainer.reset_best();
  trainer.run_epochs(cfg.epochs_per_stage - warmup, train_u, val_u, LossKind::kUncertainty, hooks);
  return trainer.best();
}

}  // namespace bayesseg
