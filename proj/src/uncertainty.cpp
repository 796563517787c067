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

#include "bayesseg/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bayesseg {

Normalization parse_normalization(std::string_view name) {
  if (name == "analytic") return Normalization::kAnalytic;
  if (name == "empirical") return Normalization::kEmpirical;
  throw std::invalid_argument("unknown normalization '" + std::string(name) + "' (expected analytic or empirical)");
}

Plane<double> entropy_map(const ProbabilityMap& pmap) {
  const auto c = static_cast<std::size_t>(pmap.num_classes);
  if (c == 0 || pmap.probs.size() != pmap.num_pixels() * c) {
    throw std::invalid_argument("entropy_map: malformed probability map");
  }
  Plane<double> h(pmap.width, pmap.height, 0.0);
  for (std::size_t i = 0; i < pmap.num_pixels(); ++i) {
    const float* p = pmap.probs.data() + i * c;
    double s = 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double v = p[k];
      if (!(v >= 0.0) || v > 1.0 + 1e-5) throw std::invalid_argument("entropy_map: probability outside [0,1]");
      sum += v;
      if (v > 0.0) s -= v * std::log(v);
    }
    if (std::abs(sum - 1.0) > 1e-4) throw std::invalid_argument("entropy_map: pixel pmf does not sum to 1");
    h.data[i] = std::clamp(s, 0.0, std::log(static_cast<double>(c)));
  }
  return h;
}

UncertaintyMap normalize(const Plane<double>& raw, Normalization mode, int num_classes) {
  UncertaintyMap out(raw.width, raw.height, 0.0f);
  if (raw.data.empty()) return out;
  double lo = 0.0;
  double hi = 0.0;
  if (mode == Normalization::kAnalytic) {
    if (num_classes < 2) throw std::invalid_argument("normalize: analytic mode needs >= 2 classes");
    hi = std::log(static_cast<double>(num_classes));
  } else {
    const auto [mn, mx] = std::minmax_element(raw.data.begin(), raw.data.end());
    lo = *mn;
    hi = *mx;
    if (hi <= lo) return out;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw.data[i] < 0.0) throw std::invalid_argument("normalize: negative entropy");
    out.data[i] = static_cast<float>(std::clamp((raw.data[i] - lo) / (hi - lo), 0.0, 1.0));
  }
  return out;
}

UncertaintyMap uncertainty_map(const ProbabilityMap& pmap, Normalization mode) {
  return normalize(entropy_map(pmap), mode, pmap.num_classes);
}

CertaintyMask threshold(const UncertaintyMap& umap, double h_threshold) {
  if (!(h_threshold >= 0.0 && h_threshold <= 1.0)) throw std::invalid_argument("threshold must lie in [0,1]");
  CertaintyMask mask(umap.width, umap.height, 0);
  for (std::size_t i = 0; i < umap.size(); ++i) {
    mask.data[i] = static_cast<double>(umap.data[i]) <= h_threshold ? 1 : 0;
  }
  return mask;
}

double tile_uncertainty(const UncertaintyMap& umap, const Tile& tile) {
  if (!tile.inside(umap.width, umap.height)) throw std::out_of_range("tile_uncertainty: tile outside the map");
  double sum = 0.0;
  for (int y = tile.y0; y < tile.y0 + tile.d; ++y) {
    const float* row = umap.data.data() + umap.index(tile.x0, y);
    for (int x = 0; x < tile.d; ++x) sum += row[x];
  }
  return sum / (static_cast<double>(tile.d) * tile.d);
}

}  // namespace bayesseg
