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

#include <string>
#include <string_view>

#include "bayesseg/plane.hpp"
#include "bayesseg/tiling.hpp"

namespace bayesseg {

enum class Normalization {
  kAnalytic,   ///< H / ln C
  kEmpirical,  ///< (H - min) / (max - min) over the map
};

Normalization parse_normalization(std::string_view name);

/// Raw predictive entropy per pixel, natural log, with 0 ln 0 = 0.
Plane<double> entropy_map(const ProbabilityMap& pmap);

/// Rescales raw entropies to [0,1]. `num_classes` fixes H_max = ln C in
/// analytic mode. In empirical mode a constant map normalizes to all zeros.
UncertaintyMap normalize(const Plane<double>& raw, Normalization mode, int num_classes);

/// Convenience: entropy_map followed by normalize.
UncertaintyMap uncertainty_map(const ProbabilityMap& pmap, Normalization mode = Normalization::kAnalytic);

/// A pixel is certain iff its normalized entropy is <= threshold.
CertaintyMask threshold(const UncertaintyMap& umap, double h_threshold);

/// Mean normalized entropy over the tile.
double tile_uncertainty(const UncertaintyMap& umap, const Tile& tile);

}  // namespace bayesseg
