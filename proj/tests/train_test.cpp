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

#include <gtest/gtest.h>

#include "bayesseg/uncertainty.hpp"
#include "test_util.hpp"

namespace bayesseg {
namespace {

TrainConfig fast_config(std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.lr_stage1 = 5e-3;
  cfg.batch_size = 4;
  cfg.epochs_per_stage = 4;
  cfg.seed = seed;
  return cfg;
}

struct Data {
  std::vector<LabeledImage> train, val;
  TileSet train_tiles, val_tiles;
};

Data make_data(std::uint64_t seed) {
  Data d;
  auto all = tiny_dataset(3, seed);
  d.train = {all[0], all[1]};
  d.val = {all[2]};
  d.train_tiles = grid_tiles(d.train, 16, 8);
  d.val_tiles = grid_tiles(d.val, 16, 8);
  return d;
}

TEST(TilesTest, GridTilesCopyPixelsAndLabels) {
  const auto data = make_data(1);
  ASSERT_EQ(data.train_tiles.size(), 2u * 5 * 3);
  const auto& s = data.train_tiles[1];  // second tile of the first image: x0 = 8
  EXPECT_EQ(s.image.size(), 256u);
  EXPECT_EQ(s.image[0], static_cast<double>(data.train[0].image(8, 0)));
  EXPECT_EQ(s.labels[17], data.train[0].labels(9, 1));
  EXPECT_TRUE(s.uncertainty.empty());
}

TEST(TrainStageTest, ReducesValidationLoss) {
  const auto data = make_data(2);
  const auto init = ModelState::initialize(tiny_net(), 3);
  const double before = evaluate_tiles(init, data.val_tiles, LossKind::kCrossEntropy, {});
  const auto cfg = fast_config();
  const auto trained = train_stage(init, data.train_tiles, data.val_tiles, cfg, cfg.lr_stage1);
  EXPECT_LT(trained.val_loss_best, before);
  EXPECT_EQ(trained.val_loss_best, evaluate_tiles(trained, data.val_tiles, LossKind::kCrossEntropy, {}));
}

TEST(TrainStageTest, DeterministicUnderSeed) {
  const auto data = make_data(2);
  const auto init = ModelState::initialize(tiny_net(), 3);
  const auto cfg = fast_config(9);
  const auto a = train_stage(init, data.train_tiles, data.val_tiles, cfg, cfg.lr_stage1);
  const auto b = train_stage(init, data.train_tiles, data.val_tiles, cfg, cfg.lr_stage1);
  EXPECT_EQ(a.val_loss_best, b.val_loss_best);
  EXPECT_EQ(a.params, b.params);
}

TEST(TrainStageTest, ZeroLearningRateKeepsWeights) {
  const auto data = make_data(2);
  const auto init = ModelState::initialize(tiny_net(), 3);
  const auto out = train_stage(init, data.train_tiles, data.val_tiles, fast_config(), 0.0);
  EXPECT_EQ(out.params, init.params);
}

TEST(TrainStageTest, KeepsLowestValidationCheckpoint) {
  const auto data = make_data(4);
  const auto init = ModelState::initialize(tiny_net(), 3);
  auto cfg = fast_config();
  cfg.lr_stage1 = 0.05;  // large enough that validation loss is not monotone
  std::vector<double> losses;
  TrainHooks hooks;
  hooks.on_epoch = [&](int, double, double v) { losses.push_back(v); };
  cfg.epochs_per_stage = 6;
  const auto out = train_stage(init, data.train_tiles, data.val_tiles, cfg, cfg.lr_stage1, &hooks);
  ASSERT_EQ(losses.size(), 6u);
  EXPECT_EQ(out.val_loss_best, *std::min_element(losses.begin(), losses.end()));
}

TEST(TrainStageTest, RejectsEmptyData) {
  const auto init = ModelState::initialize(tiny_net(), 3);
  const auto data = make_data(2);
  EXPECT_THROW(train_stage(init, {}, data.val_tiles, fast_config(), 1e-3), std::invalid_argument);
  EXPECT_THROW(train_stage(init, data.train_tiles, {}, fast_config(), 1e-3), std::invalid_argument);
}

TEST(TrainStageTest, NonFiniteLossAborts) {
  const auto data = make_data(2);
  auto init = ModelState::initialize(tiny_net(), 3);
  init.params.back() = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(train_stage(init, data.train_tiles, data.val_tiles, fast_config(), 1e-3), std::runtime_error);
}

TEST(Method2Test, FrozenMapComputedExactlyOnce) {
  const auto data = make_data(5);
  const auto init = ModelState::initialize(tiny_net(), 3);
  auto cfg = fast_config();
  cfg.loss_kind = LossKind::kUncertainty;
  int maps = 0;
  std::vector<int> epochs_at_freeze;
  int epochs = 0;
  TrainHooks hooks;
  hooks.on_epoch = [&](int, double, double) { ++epochs; };
  hooks.on_uncertainty_map = [&] {
    ++maps;
    epochs_at_freeze.push_back(epochs);
  };
  train_method2(init, data.train, data.val, cfg, tiny_inference(), &hooks);
  EXPECT_EQ(maps, 1);
  EXPECT_EQ(epochs, 4);
  EXPECT_EQ(epochs_at_freeze, std::vector<int>{2});
}

TEST(Method2Test, ZeroLambdaMatchesCrossEntropyRun) {
  const auto data = make_data(6);
  const auto init = ModelState::initialize(tiny_net(), 3);
  auto cfg = fast_config(4);
  cfg.epochs_per_stage = 6;

  std::vector<double> ce_losses, m2_losses;
  TrainHooks ce_hooks, m2_hooks;
  ce_hooks.on_epoch = [&](int, double t, double v) {
    ce_losses.push_back(t);
    ce_losses.push_back(v);
  };
  m2_hooks.on_epoch = [&](int, double t, double v) {
    m2_losses.push_back(t);
    m2_losses.push_back(v);
  };
  Trainer ce(init, cfg, cfg.lr_stage1);
  ce.run_epochs(6, data.train_tiles, data.val_tiles, LossKind::kCrossEntropy, &ce_hooks);

  auto m2_cfg = cfg;
  m2_cfg.loss_kind = LossKind::kUncertainty;
  m2_cfg.loss_params.uncertainty_lambda = 0.0;
  const auto m2 = train_method2(init, data.train, data.val, m2_cfg, tiny_inference(), &m2_hooks);
  EXPECT_EQ(m2_losses, ce_losses);

  // The returned model is the best of the later half of the CE trajectory.
  std::size_t best = 3;
  for (std::size_t e = 3; e < 6; ++e) {
    if (ce_losses[2 * e + 1] < ce_losses[2 * best + 1]) best = e;
  }
  EXPECT_EQ(m2.val_loss_best, ce_losses[2 * best + 1]);
}

TEST(Method2Test, HeldOutEntropyDoesNotGrowAfterPhaseB) {
  double after_a = 0.0, after_b = 0.0;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    auto all = tiny_dataset(4, seed);
    const std::vector<LabeledImage> train{all[0], all[1]}, val{all[2]}, held_out{all[3]};
    const auto init = ModelState::initialize(tiny_net(), seed);
    auto cfg = fast_config(seed);
    cfg.loss_kind = LossKind::kUncertainty;
    cfg.epochs_per_stage = 6;
    const auto inference = tiny_inference();

    Trainer warm(init, cfg, cfg.lr_stage1);
    warm.run_epochs(3, grid_tiles(train, 16, 8), grid_tiles(val, 16, 8), LossKind::kCrossEntropy);
    ModelState phase_a = init;
    phase_a.params = warm.live_params();
    const ModelState phase_b = train_method2(init, train, val, cfg, inference);

    auto mean_entropy = [&](const ModelState& m) {
      const auto u = uncertainty_map(predict_image(m, held_out[0].image, inference));
      double s = 0;
      for (float v : u.data) s += v;
      return s / static_cast<double>(u.data.size());
    };
    after_a += mean_entropy(phase_a);
    after_b += mean_entropy(phase_b);
  }
  EXPECT_LE(after_b, after_a);
}

TEST(Method2Test, RequiresUncertaintyLoss) {
  const auto data = make_data(6);
  const auto init = ModelState::initialize(tiny_net(), 3);
  EXPECT_THROW(train_method2(init, data.train, data.val, fast_config(), tiny_inference()), std::invalid_argument);
}

}  // namespace
}  // namespace bayesseg
