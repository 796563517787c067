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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bayesseg/plane.hpp"

namespace bayesseg {

/// Bayesian confusion over (correct/incorrect) x (certain/uncertain):
/// TP = incorrect & uncertain, FP = correct & uncertain,
/// TN = correct & certain,     FN = incorrect & certain.
struct ReliabilityCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  ReliabilityCounts& operator+=(const ReliabilityCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ReliabilityCounts&, const ReliabilityCounts&) = default;
};

ReliabilityCounts confusion(const LabelMap& pred, const LabelMap& truth, const CertaintyMask& mask);

// Undefined ratios (zero denominator) yield std::nullopt and log a warning.

/// P(correct | certain) = TN / (TN + FN).
std::optional<double> npv(const ReliabilityCounts& c);
/// P(uncertain | incorrect) = TP / (TP + FN).
std::optional<double> tpr(const ReliabilityCounts& c);
/// (TP + TN) / total.
std::optional<double> ua(const ReliabilityCounts& c);

/// Pixel counts behind the IoU of each class.
struct IouCounts {
  std::vector<std::uint64_t> intersection;
  std::vector<std::uint64_t> union_;

  explicit IouCounts(int num_classes = 0)
      : intersection(static_cast<std::size_t>(num_classes), 0), union_(static_cast<std::size_t>(num_classes), 0) {}
  IouCounts& operator+=(const IouCounts& o);
  friend bool operator==(const IouCounts&, const IouCounts&) = default;
};

IouCounts iou_counts(const LabelMap& pred, const LabelMap& truth, int num_classes);

struct IouResult {
  std::vector<std::optional<double>> per_class;  ///< nullopt for classes absent from both maps
  std::optional<double> mean;                    ///< over present classes only
};

IouResult iou(const IouCounts& counts);
IouResult iou(const LabelMap& pred, const LabelMap& truth, int num_classes);

struct ReliabilityReport {
  ReliabilityCounts counts;
  IouCounts iou_counts;
  std::optional<double> npv;
  std::optional<double> tpr;
  std::optional<double> ua;
  std::vector<std::optional<double>> iou_per_class;
  std::optional<double> mean_iou;

  /// Recomputes every metric from the stored counts.
  static ReliabilityReport from_counts(const ReliabilityCounts& counts, const IouCounts& iou_counts);
};

/// Accumulates pixels from several images and reports on the pooled counts.
class ReliabilityAccumulator {
 public:
  explicit ReliabilityAccumulator(int num_classes) : iou_(num_classes), num_classes_(num_classes) {}
  void add(const LabelMap& pred, const LabelMap& truth, const CertaintyMask& mask);
  ReliabilityReport report() const { return ReliabilityReport::from_counts(counts_, iou_); }

 private:
  ReliabilityCounts counts_;
  IouCounts iou_;
  int num_classes_;
};

/// "REPORT1\n" followed by key=value lines; metrics are written with
/// round-trip precision and "nan" for undefined values.
std::string encode_report(const ReliabilityReport& report);
/// Parses the counts and recomputes the metrics from them.
ReliabilityReport decode_report(std::string_view text);

std::string format_metric(const std::optional<double>& v, int precision = 17);

}  // namespace bayesseg
