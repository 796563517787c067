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

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <span>
#include <vector>

#include "bayesseg/plane.hpp"

namespace bayesseg {

/// Square d x d window with its top-left corner at (x0, y0).
struct Tile {
  int x0 = 0;
  int y0 = 0;
  int d = 0;

  bool inside(int width, int height) const {
    return d > 0 && x0 >= 0 && y0 >= 0 && x0 + d <= width && y0 + d <= height;
  }
  friend bool operator==(const Tile&, const Tile&) = default;
};

/// Row-major sliding-window tiling of an image.
struct TileGrid {
  std::vector<Tile> tiles;
  int stride = 0;
  int width = 0;
  int height = 0;
};

/// Window origins 0, s, 2s, ... along one axis, with a final origin flush to
/// the far edge when (extent - d) is not a multiple of s.
std::vector<int> axis_positions(int extent, int d, int stride);

/// Sliding-window grid over a width x height image.
TileGrid build_grid(int width, int height, int d, int stride);

/// Copies the tile's pixels out of `src` (row-major, d*d values).
template <typename T>
Plane<T> extract(const Plane<T>& src, const Tile& tile);

/// Per-pixel class probability vectors (class-fastest), with the number of
/// tiles that contributed to each pixel.
struct ProbabilityMap {
  int width = 0;
  int height = 0;
  int num_classes = 0;
  std::vector<float> probs;
  std::vector<std::uint32_t> coverage;

  ProbabilityMap() = default;
  ProbabilityMap(int w, int h, int c);

  std::span<float> pixel(int x, int y) {
    return {probs.data() + (static_cast<std::size_t>(y) * width + x) * num_classes,
            static_cast<std::size_t>(num_classes)};
  }
  std::span<const float> pixel(int x, int y) const {
    return {probs.data() + (static_cast<std::size_t>(y) * width + x) * num_classes,
            static_cast<std::size_t>(num_classes)};
  }
  std::size_t num_pixels() const { return static_cast<std::size_t>(width) * height; }

  friend bool operator==(const ProbabilityMap&, const ProbabilityMap&) = default;
};

/// Accumulates per-tile pmfs in the order they are added and averages them
/// where tiles overlap.
class Stitcher {
 public:
  Stitcher(int width, int height, int num_classes);

  /// `probs` holds d*d*C values, class-fastest, row-major over the tile.
  void add(const Tile& tile, std::span<const double> probs);

  /// Throws if any pixel was never covered.
  ProbabilityMap finalize() const;

 private:
  int width_;
  int height_;
  int num_classes_;
  std::vector<double> sums_;
  std::vector<std::uint32_t> coverage_;
};

struct TileProbs {
  Tile tile;
  std::vector<double> probs;
};

ProbabilityMap stitch(std::span<const TileProbs> per_tile, int width, int height, int num_classes);

/// Per-pixel argmax; ties go to the lowest class index.
LabelMap argmax_labels(const ProbabilityMap& pmap);

// -- implementation ---------------------------------------------------------

template <typename T>
Plane<T> extract(const Plane<T>& src, const Tile& tile) {
  if (!tile.inside(src.width, src.height)) {
    throw std::out_of_range("extract: tile lies outside the image");
  }
  Plane<T> out(tile.d, tile.d);
  for (int y = 0; y < tile.d; ++y) {
    const auto* row = src.data.data() + src.index(tile.x0, tile.y0 + y);
    std::copy(row, row + tile.d, out.data.begin() + static_cast<std::ptrdiff_t>(y) * tile.d);
  }
  return out;
}

}  // namespace bayesseg
