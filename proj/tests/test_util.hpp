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

#include <filesystem>
#include <random>
#include <string>

namespace bayesseg {

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("bayesseg-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace bayesseg

#include "bayesseg/inference.hpp"
#include "bayesseg/net.hpp"
#include "bayesseg/synth.hpp"

namespace bayesseg {

/// Small synthetic images for fast training tests.
inline std::vector<LabeledImage> tiny_dataset(int n, std::uint64_t seed, int width = 48, int height = 32) {
  SynthConfig cfg;
  cfg.width = width;
  cfg.height = height;
  cfg.n_images = n;
  cfg.seed = seed;
  return generate(cfg);
}

inline NetConfig tiny_net(int tile = 16) {
  NetConfig cfg;
  cfg.depth = 1;
  cfg.base_channels = 2;
  cfg.tile_size = tile;
  return cfg;
}

inline InferenceConfig tiny_inference(int tile = 16) {
  InferenceConfig cfg;
  cfg.tile_size = tile;
  cfg.stride = 8;
  cfg.mc_samples = 3;
  cfg.seed = 5;
  return cfg;
}

}  // namespace bayesseg
