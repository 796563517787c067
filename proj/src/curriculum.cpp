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

#include "bayesseg/curriculum.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bayesseg/evaluate.hpp"
#include "bayesseg/io.hpp"

namespace bayesseg {

void CurriculumConfig::validate() const {
  if (tile_size < 1) throw std::invalid_argument("curriculum tile size must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (max_stages < 1) throw std::invalid_argument("max_stages must be >= 1");
  if (min_step < 1) throw std::invalid_argument("min_step must be >= 1");
  if (!(stop_epsilon >= 0.0)) throw std::invalid_argument("stop_epsilon must be >= 0");
}

int step_size(double h, int d, double sigma, int min_step) {
  if (!(h >= 0.0 && h <= 1.0)) throw std::invalid_argument("step_size: uncertainty must lie in [0,1]");
  if (!(sigma > 0.0) || d < 1 || min_step < 1) throw std::invalid_argument("step_size: invalid parameters");
  const double raw = static_cast<double>(d) * std::exp(-(h * h) / (2.0 * sigma * sigma));
  const auto step = static_cast<int>(std::floor(raw + 0.5));
  return std::max(step, min_step);
}

CurriculumPlan build_plan(const UncertaintyMap& umap, const CurriculumConfig& cfg, std::string image_id,
                          int stage_index) {
  cfg.validate();
  const int d = cfg.tile_size;
  if (umap.width < d || umap.height < d) {
    throw std::invalid_argument("build_plan: uncertainty map is smaller than the tile size");
  }
  CurriculumPlan plan;
  plan.stage_index = stage_index;
  plan.source_image_id = std::move(image_id);
  const int last_x = umap.width - d;
  const int last_y = umap.height - d;
  for (int y = 0;;) {
    double row_sum = 0.0;
    int row_count = 0;
    for (int x = 0;;) {
      const Tile t{x, y, d};
      plan.tiles.push_back(t);
      const double h = std::clamp(tile_uncertainty(umap, t), 0.0, 1.0);
      row_sum += h;
      ++row_count;
      if (x == last_x) break;
      x = std::min(last_x, x + step_size(h, d, cfg.sigma, cfg.min_step));
    }
    if (y == last_y) break;
    const double row_mean = std::clamp(row_sum / row_count, 0.0, 1.0);
    y = std::min(last_y, y + step_size(row_mean, d, cfg.sigma, cfg.min_step));
  }
  return plan;
}

std::string encode_plan(const CurriculumPlan& plan) {
  std::ostringstream out;
  out << "PLAN1 " << (plan.source_image_id.empty() ? "-" : plan.source_image_id) << " " << plan.stage_index << "\n";
  for (const auto& t : plan.tiles) out << t.x0 << " " << t.y0 << " " << t.d << "\n";
  return out.str();
}

CurriculumPlan decode_plan(std::string_view text) {
  const auto body = detail::header_end(text, "PLAN1 ");
  CurriculumPlan plan;
  std::istringstream hdr(std::string(text.substr(6, body - 7)));
  if (!(hdr >> plan.source_image_id >> plan.stage_index)) throw FormatError("bad PLAN1 header");
  if (plan.source_image_id == "-") plan.source_image_id.clear();
  std::istringstream in{std::string(text.substr(body))};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    Tile t;
    std::string extra;
    if (!(fields >> t.x0 >> t.y0 >> t.d) || (fields >> extra)) {
      throw FormatError("PLAN1: malformed tile line '" + line + "'");
    }
    plan.tiles.push_back(t);
  }
  return plan;
}

CurriculumResult run_curriculum(const ModelState& initial, std::span<const LabeledImage> train_images,
                                std::span<const LabeledImage> val_images, const CurriculumConfig& cfg,
                                const TrainConfig& train_cfg, const InferenceConfig& inference,
                                CurriculumHooks* hooks) {
  cfg.validate();
  train_cfg.validate();
  inference.validate();
  if (cfg.tile_size != inference.tile_size || cfg.tile_size != initial.config.tile_size) {
    throw std::invalid_argument("run_curriculum: tile sizes of model, inference and curriculum differ");
  }
  if (train_images.empty() || val_images.empty()) {
    throw std::invalid_argument("run_curriculum: needs training and validation images");
  }
  const TileSet val_tiles = grid_tiles(val_images, inference.tile_size, inference.stride);

  CurriculumResult result;
  result.model = initial;
  StageRecord first;
  first.stage = 1;
  first.val_loss = initial.val_loss_best;
  first.validation = evaluate_images(initial, val_images, inference);
  result.history.push_back(first);
  if (hooks && hooks->on_stage) hooks->on_stage(first);
  double best_ua = first.validation.ua.value_or(-1.0);

  ModelState current = initial;
  for (int stage = 2; stage <= cfg.max_stages; ++stage) {
    TileSet train;
    result.plans.clear();
    for (const auto& im : train_images) {
      const auto umap = uncertainty_map(predict_image(current, im.image, inference), inference.normalization);
      auto plan = build_plan(umap, cfg, im.id, stage);
      if (hooks && hooks->on_plan) hooks->on_plan(plan);
      auto part = make_tiles(im.image, im.labels, plan.tiles);
      std::move(part.begin(), part.end(), std::back_inserter(train));
      result.plans.push_back(std::move(plan));
    }

    TrainConfig stage_cfg = train_cfg;
    stage_cfg.seed = derive_seed(train_cfg.seed, static_cast<std::uint64_t>(stage));
    current = train_stage(current, train, val_tiles, stage_cfg, train_cfg.lr_curriculum);

    StageRecord rec;
    rec.stage = stage;
    rec.train_tiles = train.size();
    rec.val_loss = current.val_loss_best;
    rec.validation = evaluate_images(current, val_images, inference);
    result.history.push_back(rec);
    if (hooks && hooks->on_stage) hooks->on_stage(rec);

    const double ua_now = rec.validation.ua.value_or(-1.0);
    const double improvement = ua_now - best_ua;
    if (ua_now > best_ua) {
      best_ua = ua_now;
      result.model = current;
      result.best_stage = stage;
    }
    if (improvement < cfg.stop_epsilon) break;
  }
  return result;
}

std::string encode_history(const CurriculumResult& result) {
  std::ostringstream out;
  out << "HISTORY1\n";
  out << "best_stage=" << result.best_stage << "\n";
  for (const auto& r : result.history) {
    out << "stage=" << r.stage << " train_tiles=" << r.train_tiles << " val_loss=" << format_metric(r.val_loss)
        << " tp=" << r.validation.counts.tp << " fp=" << r.validation.counts.fp << " tn=" << r.validation.counts.tn
        << " fn=" << r.validation.counts.fn << " npv=" << format_metric(r.validation.npv)
        << " tpr=" << format_metric(r.validation.tpr) << " ua=" << format_metric(r.validation.ua)
        << " mean_iou=" << format_metric(r.validation.mean_iou) << "\n";
  }
  return out.str();
}

}  // namespace bayesseg
