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

#include "bayesseg/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace bayesseg {

namespace {

void check_shapes(const PixelProbs& pred, std::span<const std::uint8_t> truth) {
  if (static_cast<std::size_t>(pred.cols()) != truth.size() || truth.empty()) {
    throw std::invalid_argument("loss: prediction and truth sizes differ");
  }
  for (auto t : truth) {
    if (t >= pred.rows()) throw std::invalid_argument("loss: label out of range");
  }
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy: return "CE";
    case LossKind::kDice: return "Dice";
    case LossKind::kSensitivitySpecificity: return "SS";
    case LossKind::kCrossEntropyDice: return "CE+Dice";
    case LossKind::kUncertainty: return "Uncertainty";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ce") return LossKind::kCrossEntropy;
  if (s == "dice") return LossKind::kDice;
  if (s == "ss") return LossKind::kSensitivitySpecificity;
  if (s == "ce+dice") return LossKind::kCrossEntropyDice;
  if (s == "uncertainty") return LossKind::kUncertainty;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "' (expected ce, dice, ss, ce+dice, uncertainty)");
}

double loss_ce(const PixelProbs& pred, std::span<const std::uint8_t> truth, PixelProbs* grad) {
  check_shapes(pred, truth);
  const auto n = static_cast<double>(truth.size());
  if (grad) grad->setZero(pred.rows(), pred.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.cols(); ++i) {
    const double p = pred(truth[static_cast<std::size_t>(i)], i);
    if (!(p <= kCrossEntropyEpsilon)) {  // NaN takes this branch and propagates
      sum -= std::log(p);
      if (grad) (*grad)(truth[static_cast<std::size_t>(i)], i) = -1.0 / (n * p);
    } else {
      sum -= std::log(kCrossEntropyEpsilon);
    }
  }
  return sum / n;
}

double loss_dice(const PixelProbs& pred, std::span<const std::uint8_t> truth, PixelProbs* grad) {
  check_shapes(pred, truth);
  const Eigen::Index c = pred.rows();
  Eigen::VectorXd inter = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd truth_count = Eigen::VectorXd::Zero(c);
  const Eigen::VectorXd pred_sum = pred.rowwise().sum();
  for (Eigen::Index i = 0; i < pred.cols(); ++i) {
    const auto t = truth[static_cast<std::size_t>(i)];
    inter(t) += pred(t, i);
    truth_count(t) += 1.0;
  }
  double loss = 0.0;
  Eigen::VectorXd denom(c), numer(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    numer(k) = 2.0 * inter(k) + kDiceSmoothing;
    denom(k) = pred_sum(k) + truth_count(k) + kDiceSmoothing;
    loss += 1.0 - numer(k) / denom(k);
  }
  if (grad) {
    grad->resize(c, pred.cols());
    for (Eigen::Index i = 0; i < pred.cols(); ++i) {
      const auto t = truth[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < c; ++k) {
        const double g = (k == t) ? 1.0 : 0.0;
        (*grad)(k, i) = -(2.0 * g * denom(k) - numer(k)) / (denom(k) * denom(k) * static_cast<double>(c));
      }
    }
  }
  return loss / static_cast<double>(c);
}

double loss_ss(const PixelProbs& pred, std::span<const std::uint8_t> truth, double w, PixelProbs* grad) {
  check_shapes(pred, truth);
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("loss_ss: weight must be in [0,1]");
  const Eigen::Index c = pred.rows();
  const auto n = static_cast<double>(truth.size());
  Eigen::VectorXd pos = Eigen::VectorXd::Zero(c);
  for (auto t : truth) pos(t) += 1.0;
  Eigen::VectorXd sens = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd spec = Eigen::VectorXd::Zero(c);
  for (Eigen::Index i = 0; i < pred.cols(); ++i) {
    const auto t = truth[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < c; ++k) {
      const double g = (k == t) ? 1.0 : 0.0;
      const double e = (g - pred(k, i)) * (g - pred(k, i));
      if (k == t) sens(k) += e;
      else spec(k) += e;
    }
  }
  double loss = 0.0;
  Eigen::VectorXd sens_scale(c), spec_scale(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    const double neg = n - pos(k);
    sens_scale(k) = pos(k) > 0.0 ? w / pos(k) : 0.0;
    spec_scale(k) = neg > 0.0 ? (1.0 - w) / neg : 0.0;
    loss += sens_scale(k) * sens(k) + spec_scale(k) * spec(k);
  }
  if (grad) {
    grad->resize(c, pred.cols());
    for (Eigen::Index i = 0; i < pred.cols(); ++i) {
      const auto t = truth[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < c; ++k) {
        const double g = (k == t) ? 1.0 : 0.0;
        const double scale = (k == t) ? sens_scale(k) : spec_scale(k);
        (*grad)(k, i) = -2.0 * (g - pred(k, i)) * scale / static_cast<double>(c);
      }
    }
  }
  return loss / static_cast<double>(c);
}

double loss_uncertainty(const PixelProbs& pred, std::span<const std::uint8_t> truth,
                        std::span<const float> frozen_uncertainty, double lambda, PixelProbs* grad) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("loss_uncertainty: lambda must be >= 0");
  const double ce = loss_ce(pred, truth, grad);
  if (lambda == 0.0) return ce;
  if (frozen_uncertainty.size() != truth.size()) {
    throw std::invalid_argument("loss_uncertainty: uncertainty map size differs from the tile");
  }
  const auto n = static_cast<double>(truth.size());
  const double h_max = std::log(static_cast<double>(pred.rows()));
  const double scale = lambda / (n * h_max);
  const double log_eps = std::log(kCrossEntropyEpsilon);
  double term = 0.0;
  for (Eigen::Index i = 0; i < pred.cols(); ++i) {
    const double u = frozen_uncertainty[static_cast<std::size_t>(i)];
    double h = 0.0;
    for (Eigen::Index k = 0; k < pred.rows(); ++k) {
      const double p = pred(k, i);
      if (p > kCrossEntropyEpsilon) {
        h -= p * std::log(p);
        if (grad) (*grad)(k, i) -= scale * u * (std::log(p) + 1.0);
      } else {
        h -= p * log_eps;
        if (grad) (*grad)(k, i) -= scale * u * log_eps;
      }
    }
    term += u * h;
  }
  return ce + scale * term;
}

double evaluate_loss(LossKind kind, const LossParams& params, const PixelProbs& pred,
                     std::span<const std::uint8_t> truth, std::span<const float> frozen_uncertainty,
                     PixelProbs* grad) {
  switch (kind) {
    case LossKind::kCrossEntropy: return loss_ce(pred, truth, grad);
    case LossKind::kDice: return loss_dice(pred, truth, grad);
    case LossKind::kSensitivitySpecificity: return loss_ss(pred, truth, params.ss_weight, grad);
    case LossKind::kCrossEntropyDice: {
      PixelProbs g2;
      const double v = loss_ce(pred, truth, grad) + loss_dice(pred, truth, grad ? &g2 : nullptr);
      if (grad) *grad += g2;
      return v;
    }
    case LossKind::kUncertainty:
      return loss_uncertainty(pred, truth, frozen_uncertainty, params.uncertainty_lambda, grad);
  }
  throw std::invalid_argument("evaluate_loss: unknown loss kind");
}

}  // namespace bayesseg
