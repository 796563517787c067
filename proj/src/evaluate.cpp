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

#include "bayesseg/evaluate.hpp"

namespace bayesseg {

ReliabilityReport evaluate_images(const ModelState& model, std::span<const LabeledImage> images,
                                  const InferenceConfig& cfg) {
  ReliabilityAccumulator acc(model.config.num_classes);
  for (const auto& im : images) {
    const auto pred = analyze_image(model, im.image, cfg);
    acc.add(pred.labels, im.labels, pred.mask);
  }
  return acc.report();
}

}  // namespace bayesseg
