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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bayesseg/inference.hpp"

namespace bayesseg {

/// Band-limited texture: `mean` plus a sum of plane waves whose spatial
/// frequency (cycles/pixel) is jittered around `frequency`, plus white noise.
struct TextureParams {
  double mean = 0.5;
  double amplitude = 0.1;
  double frequency = 0.1;
  double noise = 0.03;
};

enum SynthClass : std::uint8_t { kGood = 0, kBad = 1, kBackground = 2 };

struct SynthConfig {
  int width = 512;
  int height = 384;
  int n_images = 12;
  std::uint64_t seed = 0;
  /// Indexed by SynthClass.
  std::array<TextureParams, 3> textures{{
      {0.60, 0.16, 0.08, 0.03},  // Good: medium-frequency
      {0.52, 0.16, 0.22, 0.03},  // Bad: fine-grained
      {0.32, 0.06, 0.02, 0.03},  // BGD: smooth
  }};
  int blob_count_min = 2;
  int blob_count_max = 6;
  /// Blob radii as fractions of min(width, height).
  double blob_radius_min = 0.15;
  double blob_radius_max = 0.32;

  void validate() const;
};

/// One synthetic image. Deterministic in (cfg.seed, index).
LabeledImage generate_one(const SynthConfig& cfg, int index);

/// cfg.n_images images with ids "img000", "img001", ...
std::vector<LabeledImage> generate(const SynthConfig& cfg);

/// Seed used for image `index`.
std::uint64_t image_seed(const SynthConfig& cfg, int index);

/// Fills the whole canvas with the given texture (8-bit quantized).
LargeImage render_texture(const TextureParams& tex, int width, int height, std::uint64_t seed);

struct Region {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

/// Blends the region toward an even mix of the Good and Bad textures:
/// v' = (1 - a) v + a mix. Pixels outside the region are untouched; labels
/// are not affected.
LargeImage corrupt_region(const LargeImage& image, const Region& region, double amplitude, std::uint64_t seed,
                          const SynthConfig& cfg = {});

/// Writes <id>.pgm and <id>_labels.pgm for every image plus a manifest
/// ("DATASET1 <n>" then "<id> <image> <labels> <seed>" per line, paths
/// relative to the manifest). Returns the manifest path.
std::filesystem::path save_dataset(const std::filesystem::path& dir, std::span<const LabeledImage> images,
                                   const SynthConfig& cfg);

/// Loads every pair listed in a dataset manifest.
std::vector<LabeledImage> load_dataset(const std::filesystem::path& manifest);

}  // namespace bayesseg
