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

#include "bayesseg/inference.hpp"

#include <exception>
#include <stdexcept>
#include <thread>

namespace bayesseg {

void InferenceConfig::validate() const {
  if (tile_size < 1) throw std::invalid_argument("tile size must be >= 1");
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (mc_samples < 1) throw std::invalid_argument("MC sample count must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in [0,1]");
}

std::vector<double> tile_input(const LargeImage& image, const Tile& tile) {
  const auto sub = extract(image, tile);
  return {sub.data.begin(), sub.data.end()};
}

ProbabilityMap predict_image(const ModelState& model, const LargeImage& image, const InferenceConfig& cfg) {
  cfg.validate();
  if (cfg.tile_size != model.config.tile_size) {
    throw std::invalid_argument("predict_image: tile size " + std::to_string(cfg.tile_size) +
                                " differs from the model's " + std::to_string(model.config.tile_size));
  }
  const auto grid = build_grid(image.width, image.height, cfg.tile_size, cfg.stride);
  Stitcher stitcher(image.width, image.height, model.config.num_classes);
  const UNet net(model.config);

  auto predict_one = [&](std::size_t i) {
    const auto input = tile_input(image, grid.tiles[i]);
    const std::uint64_t seed = tile_seed(cfg.seed, i);
    PixelProbs mean = mc_sample(model, net, input, mc_sample_seed(seed, 0));
    for (int t = 1; t < cfg.mc_samples; ++t) mean += mc_sample(model, net, input, mc_sample_seed(seed, t));
    mean /= static_cast<double>(cfg.mc_samples);
    return mean;
  };

  const std::size_t n = grid.tiles.size();
  const auto jobs = static_cast<std::size_t>(cfg.jobs);
  std::vector<PixelProbs> chunk(jobs);
  for (std::size_t start = 0; start < n; start += jobs) {
    const std::size_t count = std::min(jobs, n - start);
    if (count == 1) {
      chunk[0] = predict_one(start);
    } else {
      std::vector<std::exception_ptr> errors(count);
      {
        std::vector<std::jthread> workers;
        for (std::size_t j = 0; j < count; ++j) {
          workers.emplace_back([&, j] {
            try {
              chunk[j] = predict_one(start + j);
            } catch (...) {
              errors[j] = std::current_exception();
            }
          });
        }
      }
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (std::size_t j = 0; j < count; ++j) {
      stitcher.add(grid.tiles[start + j], {chunk[j].data(), static_cast<std::size_t>(chunk[j].size())});
    }
  }
  return stitcher.finalize();
}

Prediction analyze_image(const ModelState& model, const LargeImage& image, const InferenceConfig& cfg) {
  Prediction p;
  p.pmap = predict_image(model, image, cfg);
  p.labels = argmax_labels(p.pmap);
  p.umap = uncertainty_map(p.pmap, cfg.normalization);
  p.mask = threshold(p.umap, cfg.threshold);
  return p;
}

}  // namespace bayesseg
