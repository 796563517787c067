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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bayesseg {

/// Dense row-major 2-D array.
template <typename T>
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Plane() = default;
  Plane(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w < 0 || h < 0) throw std::invalid_argument("Plane: negative dimensions");
  }

  std::size_t size() const { return data.size(); }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  T& operator()(int x, int y) { return data[index(x, y)]; }
  const T& operator()(int x, int y) const { return data[index(x, y)]; }

  bool same_shape(int w, int h) const { return width == w && height == h; }
  template <typename U>
  bool same_shape(const Plane<U>& other) const {
    return width == other.width && height == other.height;
  }

  friend bool operator==(const Plane&, const Plane&) = default;
};

/// Grayscale input image with intensities in [0,1].
using LargeImage = Plane<float>;

/// Per-pixel normalized predictive entropy in [0,1].
using UncertaintyMap = Plane<float>;

/// 1 where the prediction is certain, 0 where it is uncertain.
using CertaintyMask = Plane<std::uint8_t>;

inline const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> names{"Good", "Bad", "BGD"};
  return names;
}

/// Per-pixel class indices plus the class vocabulary.
struct LabelMap : Plane<std::uint8_t> {
  std::vector<std::string> class_names = default_class_names();

  LabelMap() = default;
  LabelMap(int w, int h, std::uint8_t fill = 0) : Plane<std::uint8_t>(w, h, fill) {}

  int num_classes() const { return static_cast<int>(class_names.size()); }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Throws unless every intensity lies in [0,1].
void validate_image(const LargeImage& image);

/// Throws unless every label is below the class count.
void validate_labels(const LabelMap& labels);

}  // namespace bayesseg
