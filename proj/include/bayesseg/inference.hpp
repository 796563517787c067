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
#include <string>

#include "bayesseg/net.hpp"
#include "bayesseg/plane.hpp"
#include "bayesseg/tiling.hpp"
#include "bayesseg/uncertainty.hpp"

namespace bayesseg {

/// An image with its ground truth.
struct LabeledImage {
  std::string id;
  LargeImage image;
  LabelMap labels;
};

struct InferenceConfig {
  int tile_size = 160;
  int stride = 10;
  int mc_samples = 10;
  std::uint64_t seed = 0;
  int jobs = 1;
  Normalization normalization = Normalization::kAnalytic;
  double threshold = 0.5;

  void validate() const;
};

/// Converts a tile of the image to network input.
std::vector<double> tile_input(const LargeImage& image, const Tile& tile);

/// Monte Carlo predictive mean of every grid tile, stitched over the image.
/// Tile i of the grid is predicted with seed `cfg.seed ^ i`; up to
/// `cfg.jobs` tiles are predicted concurrently and stitched in grid order,
/// so the result does not depend on the job count.
ProbabilityMap predict_image(const ModelState& model, const LargeImage& image, const InferenceConfig& cfg);

/// Everything derived from one prediction of one image.
struct Prediction {
  ProbabilityMap pmap;
  LabelMap labels;
  UncertaintyMap umap;
  CertaintyMask mask;
};

Prediction analyze_image(const ModelState& model, const LargeImage& image, const InferenceConfig& cfg);

}  // namespace bayesseg
