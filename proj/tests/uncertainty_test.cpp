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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bayesseg/random.hpp"

namespace bayesseg {
namespace {

ProbabilityMap single_pixel(std::vector<float> pmf) {
  ProbabilityMap m(1, 1, static_cast<int>(pmf.size()));
  m.probs = std::move(pmf);
  std::fill(m.coverage.begin(), m.coverage.end(), 1u);
  return m;
}

ProbabilityMap random_pmap(Rng& rng, int w, int h, int c) {
  ProbabilityMap m(w, h, c);
  for (int i = 0; i < w * h; ++i) {
    float s = 0;
    auto px = m.pixel(i % w, i / w);
    for (auto& p : px) s += (p = static_cast<float>(rng.uniform()) + 0.01f);
    for (auto& p : px) p /= s;
  }
  std::fill(m.coverage.begin(), m.coverage.end(), 1u);
  return m;
}

TEST(EntropyTest, Examples) {
  EXPECT_DOUBLE_EQ(entropy_map(single_pixel({0, 1, 0})).data[0], 0.0);
  EXPECT_NEAR(entropy_map(single_pixel({1.f / 3, 1.f / 3, 1.f / 3})).data[0], std::log(3.0), 1e-6);
  EXPECT_NEAR(entropy_map(single_pixel({0.5f, 0.5f, 0})).data[0], std::log(2.0), 1e-7);
}

TEST(EntropyTest, RejectsMalformedPmf) {
  EXPECT_THROW(entropy_map(single_pixel({0.5f, 0.2f, 0.1f})), std::invalid_argument);
  EXPECT_THROW(entropy_map(single_pixel({1.5f, -0.5f, 0.0f})), std::invalid_argument);
}

TEST(EntropyTest, PermutationInvariantPerPixel) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    ProbabilityMap m = random_pmap(rng, 3, 2, 4);
    ProbabilityMap perm = m;
    for (int i = 0; i < 6; ++i) {
      auto px = perm.pixel(i % 3, i / 3);
      std::reverse(px.begin(), px.end());
      std::rotate(px.begin(), px.begin() + 1, px.end());
    }
    const auto a = entropy_map(m), b = entropy_map(perm);
    for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-12);
  }
}

TEST(NormalizeTest, AnalyticExamples) {
  EXPECT_NEAR(uncertainty_map(single_pixel({1.f / 3, 1.f / 3, 1.f / 3}))(0, 0), 1.0f, 1e-6);
  EXPECT_EQ(uncertainty_map(single_pixel({1, 0, 0}))(0, 0), 0.0f);
  EXPECT_NEAR(uncertainty_map(single_pixel({0.5f, 0.5f, 0}))(0, 0), std::log(2.0) / std::log(3.0), 1e-6);
}

TEST(NormalizeTest, EmpiricalMinMaxAndConstantRule) {
  Plane<double> raw(3, 1);
  raw.data = {0.2, 0.6, 1.0};
  const auto u = normalize(raw, Normalization::kEmpirical, 3);
  EXPECT_FLOAT_EQ(u.data[0], 0.0f);
  EXPECT_FLOAT_EQ(u.data[1], 0.5f);
  EXPECT_FLOAT_EQ(u.data[2], 1.0f);
  raw.data = {0.7, 0.7, 0.7};
  for (float v : normalize(raw, Normalization::kEmpirical, 3).data) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(parse_normalization("empirical"), Normalization::kEmpirical);
  EXPECT_THROW(parse_normalization("zscore"), std::invalid_argument);
}

TEST(NormalizeTest, BoundedInBothModes) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pm = random_pmap(rng, 5, 4, 3);
    for (auto mode : {Normalization::kAnalytic, Normalization::kEmpirical}) {
      for (float v : uncertainty_map(pm, mode).data) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
      }
    }
  }
}

TEST(ThresholdTest, ExamplesAndBoundaries) {
  UncertaintyMap u(3, 1);
  u.data = {0.3f, 0.5f, 0.7f};
  EXPECT_EQ(threshold(u, 0.5).data, (std::vector<std::uint8_t>{1, 1, 0}));
  EXPECT_EQ(threshold(u, 1.0).data, (std::vector<std::uint8_t>{1, 1, 1}));
  u.data = {0.0f, 1e-7f, 0.2f};
  EXPECT_EQ(threshold(u, 0.0).data, (std::vector<std::uint8_t>{1, 0, 0}));
  EXPECT_THROW(threshold(u, 1.01), std::invalid_argument);
  EXPECT_THROW(threshold(u, -0.1), std::invalid_argument);
}

TEST(ThresholdTest, Monotone) {
  Rng rng(7);
  UncertaintyMap u(16, 16);
  for (auto& v : u.data) v = static_cast<float>(rng.uniform());
  std::vector<std::uint8_t> prev(u.data.size(), 0);
  for (int k = 0; k <= 20; ++k) {
    const auto m = threshold(u, k / 20.0);
    for (std::size_t i = 0; i < prev.size(); ++i) EXPECT_GE(m.data[i], prev[i]);
    prev = m.data;
  }
}

TEST(TileUncertaintyTest, MeanOverTile) {
  UncertaintyMap u(6, 5);
  std::fill(u.data.begin(), u.data.end(), 0.4f);
  EXPECT_NEAR(tile_uncertainty(u, {1, 1, 4}), 0.4, 1e-7);
  std::fill(u.data.begin(), u.data.end(), 0.0f);
  EXPECT_EQ(tile_uncertainty(u, {0, 0, 5}), 0.0);
  Rng rng(8);
  for (auto& v : u.data) v = static_cast<float>(rng.uniform());
  for (int y0 = 0; y0 <= 1; ++y0) {
    for (int x0 = 0; x0 <= 2; ++x0) {
      double s = 0, lo = 1, hi = 0;
      for (int y = y0; y < y0 + 4; ++y)
        for (int x = x0; x < x0 + 4; ++x) {
          s += u(x, y);
          lo = std::min<double>(lo, u(x, y));
          hi = std::max<double>(hi, u(x, y));
        }
      const double got = tile_uncertainty(u, {x0, y0, 4});
      EXPECT_NEAR(got, s / 16, 1e-12);
      EXPECT_GE(got, lo - 1e-12);
      EXPECT_LE(got, hi + 1e-12);
    }
  }
  EXPECT_THROW(tile_uncertainty(u, {3, 0, 4}), std::out_of_range);
}

}  // namespace
}  // namespace bayesseg
