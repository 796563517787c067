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
#include <span>
#include <string>
#include <string_view>

#include "bayesseg/net.hpp"

namespace bayesseg {

enum class LossKind { kCrossEntropy, kDice, kSensitivitySpecificity, kCrossEntropyDice, kUncertainty };

std::string to_string(LossKind kind);
/// Accepts ce, dice, ss, ce+dice, uncertainty (case-insensitive).
LossKind parse_loss_kind(std::string_view name);

inline constexpr double kCrossEntropyEpsilon = 1e-7;
inline constexpr double kDiceSmoothing = 1e-6;

struct LossParams {
  double ss_weight = 0.05;
  double uncertainty_lambda = 1.0;
};

// All losses take the predicted pmfs (C x N) and the true class of each of
// the N pixels. When `grad` is non-null it receives d(loss)/d(pred).

/// Mean of -ln max(p_true, 1e-7) over pixels.
double loss_ce(const PixelProbs& pred, std::span<const std::uint8_t> truth, PixelProbs* grad = nullptr);

/// 1 - (2 sum p g + eps) / (sum p + sum g + eps), averaged over classes.
double loss_dice(const PixelProbs& pred, std::span<const std::uint8_t> truth, PixelProbs* grad = nullptr);

/// Per class: w * sum (g-p)^2 g / sum g + (1-w) * sum (g-p)^2 (1-g) / sum (1-g),
/// averaged over classes. A term whose normalizer is zero contributes 0.
double loss_ss(const PixelProbs& pred, std::span<const std::uint8_t> truth, double w = 0.05,
               PixelProbs* grad = nullptr);

/// loss_ce + lambda * mean_i(u_i * H(p_i) / ln C), with u the frozen
/// normalized uncertainty of each pixel.
double loss_uncertainty(const PixelProbs& pred, std::span<const std::uint8_t> truth,
                        std::span<const float> frozen_uncertainty, double lambda, PixelProbs* grad = nullptr);

/// Dispatches on `kind`. `frozen_uncertainty` is only read by kUncertainty.
double evaluate_loss(LossKind kind, const LossParams& params, const PixelProbs& pred,
                     std::span<const std::uint8_t> truth, std::span<const float> frozen_uncertainty,
                     PixelProbs* grad = nullptr);

}  // namespace bayesseg
