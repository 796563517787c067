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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bayesseg/metrics.hpp"
#include "bayesseg/train.hpp"
#include "bayesseg/uncertainty.hpp"

namespace bayesseg {

struct CurriculumConfig {
  int tile_size = 160;
  double sigma = 0.4;
  int max_stages = 4;  ///< including the initial stage
  int min_step = 1;
  double stop_epsilon = 0.001;

  void validate() const;
};

struct CurriculumPlan {
  std::vector<Tile> tiles;
  int stage_index = 0;
  std::string source_image_id;

  friend bool operator==(const CurriculumPlan&, const CurriculumPlan&) = default;
};

/// Gaussian step rule: round-half-up(d * exp(-h^2 / (2 sigma^2))), at least
/// `min_step`. `h` must lie in [0,1].
int step_size(double h, int d, double sigma, int min_step = 1);

/// Scans the map from the top-left corner. Within a row the next tile is
/// step_size(H(current tile)) to the right; the next row is
/// step_size(mean H over the row) below. The last tile of each row and the
/// last row are placed flush with the right and bottom edges.
CurriculumPlan build_plan(const UncertaintyMap& umap, const CurriculumConfig& cfg, std::string image_id = {},
                          int stage_index = 0);

/// "PLAN1 <image_id> <stage>\n" followed by one "x0 y0 d" line per tile.
std::string encode_plan(const CurriculumPlan& plan);
CurriculumPlan decode_plan(std::string_view text);

struct StageRecord {
  int stage = 1;
  std::size_t train_tiles = 0;
  double val_loss = 0.0;
  ReliabilityReport validation;
};

struct CurriculumResult {
  ModelState model;  ///< checkpoint with the best validation UA
  int best_stage = 1;
  std::vector<StageRecord> history;
  std::vector<CurriculumPlan> plans;  ///< plans of the last stage that ran
};

/// Optional callbacks for observing a curriculum run.
struct CurriculumHooks {
  std::function<void(const StageRecord&)> on_stage;
  std::function<void(const CurriculumPlan&)> on_plan;
};

/// Resamples the training images by uncertainty and retrains, starting from
/// a model trained in the initial stage. Each curriculum stage predicts the
/// training images, builds one plan per image, trains on the planned tiles
/// at the curriculum learning rate, and measures UA on the validation
/// images. Stops when UA improves by less than `stop_epsilon` over the best
/// so far or after `max_stages` stages in total.
CurriculumResult run_curriculum(const ModelState& initial, std::span<const LabeledImage> train_images,
                                std::span<const LabeledImage> val_images, const CurriculumConfig& cfg,
                                const TrainConfig& train_cfg, const InferenceConfig& inference,
                                CurriculumHooks* hooks = nullptr);

/// "HISTORY1\n" + one key=value line per stage.
std::string encode_history(const CurriculumResult& result);

}  // namespace bayesseg
