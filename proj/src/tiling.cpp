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

#include "bayesseg/tiling.hpp"

#include <stdexcept>
#include <string>

namespace bayesseg {

void validate_image(const LargeImage& image) {
  for (float v : image.data) {
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("image intensity outside [0,1]");
  }
}

void validate_labels(const LabelMap& labels) {
  const int c = labels.num_classes();
  for (auto v : labels.data) {
    if (v >= c) {
      throw std::invalid_argument("label " + std::to_string(v) + " >= class count " + std::to_string(c));
    }
  }
}

std::vector<int> axis_positions(int extent, int d, int stride) {
  if (stride <= 0) throw std::invalid_argument("stride must be >= 1");
  if (d <= 0) throw std::invalid_argument("tile size must be >= 1");
  if (stride > d) {
    throw std::invalid_argument("stride " + std::to_string(stride) + " exceeds tile size " + std::to_string(d) +
                                "; the grid would leave gaps");
  }
  if (d > extent) {
    throw std::invalid_argument("tile size " + std::to_string(d) + " exceeds image dimension " +
                                std::to_string(extent));
  }
  std::vector<int> pos;
  const int last = extent - d;
  for (int p = 0; p <= last; p += stride) pos.push_back(p);
  if (pos.back() != last) pos.push_back(last);
  return pos;
}

TileGrid build_grid(int width, int height, int d, int stride) {
  const auto xs = axis_positions(width, d, stride);
  const auto ys = axis_positions(height, d, stride);
  TileGrid grid;
  grid.stride = stride;
  grid.width = width;
  grid.height = height;
  grid.tiles.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) grid.tiles.push_back({x, y, d});
  }
  return grid;
}

ProbabilityMap::ProbabilityMap(int w, int h, int c)
    : width(w),
      height(h),
      num_classes(c),
      probs(static_cast<std::size_t>(w) * h * c, 0.0f),
      coverage(static_cast<std::size_t>(w) * h, 0) {}

Stitcher::Stitcher(int width, int height, int num_classes)
    : width_(width),
      height_(height),
      num_classes_(num_classes),
      sums_(static_cast<std::size_t>(width) * height * num_classes, 0.0),
      coverage_(static_cast<std::size_t>(width) * height, 0) {
  if (width <= 0 || height <= 0 || num_classes <= 0) {
    throw std::invalid_argument("Stitcher: empty output shape");
  }
}

void Stitcher::add(const Tile& tile, std::span<const double> probs) {
  if (!tile.inside(width_, height_)) throw std::out_of_range("stitch: tile lies outside the image");
  const auto c = static_cast<std::size_t>(num_classes_);
  if (probs.size() != static_cast<std::size_t>(tile.d) * tile.d * c) {
    throw std::invalid_argument("stitch: tile probability array has the wrong size");
  }
  for (int y = 0; y < tile.d; ++y) {
    for (int x = 0; x < tile.d; ++x) {
      const std::size_t dst = static_cast<std::size_t>(tile.y0 + y) * width_ + (tile.x0 + x);
      const double* src = probs.data() + (static_cast<std::size_t>(y) * tile.d + x) * c;
      double* acc = sums_.data() + dst * c;
      for (std::size_t k = 0; k < c; ++k) acc[k] += src[k];
      ++coverage_[dst];
    }
  }
}

ProbabilityMap Stitcher::finalize() const {
  ProbabilityMap out(width_, height_, num_classes_);
  const auto c = static_cast<std::size_t>(num_classes_);
  for (std::size_t i = 0; i < coverage_.size(); ++i) {
    const auto n = coverage_[i];
    if (n == 0) {
      throw std::runtime_error("stitch: pixel (" + std::to_string(i % width_) + ", " +
                               std::to_string(i / width_) + ") is not covered by any tile");
    }
    for (std::size_t k = 0; k < c; ++k) {
      out.probs[i * c + k] = static_cast<float>(sums_[i * c + k] / n);
    }
  }
  out.coverage = coverage_;
  return out;
}

ProbabilityMap stitch(std::span<const TileProbs> per_tile, int width, int height, int num_classes) {
  Stitcher s(width, height, num_classes);
  for (const auto& tp : per_tile) s.add(tp.tile, tp.probs);
  return s.finalize();
}

LabelMap argmax_labels(const ProbabilityMap& pmap) {
  if (pmap.num_classes <= 0 || pmap.num_classes > 255) {
    throw std::invalid_argument("argmax_labels: class count must be in [1, 255]");
  }
  if (pmap.probs.size() != pmap.num_pixels() * pmap.num_classes) {
    throw std::invalid_argument("argmax_labels: malformed probability map");
  }
  LabelMap out(pmap.width, pmap.height);
  if (pmap.num_classes != out.num_classes()) {
    out.class_names.clear();
    for (int k = 0; k < pmap.num_classes; ++k) out.class_names.push_back("class" + std::to_string(k));
  }
  const auto c = static_cast<std::size_t>(pmap.num_classes);
  for (std::size_t i = 0; i < pmap.num_pixels(); ++i) {
    const float* p = pmap.probs.data() + i * c;
    std::size_t best = 0;
    for (std::size_t k = 1; k < c; ++k) {
      if (p[k] > p[best]) best = k;
    }
    out.data[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace bayesseg
