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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bayesseg/curriculum.hpp"
#include "bayesseg/metrics.hpp"
#include "bayesseg/net.hpp"
#include "bayesseg/train.hpp"

namespace bayesseg {

struct FoldSplit {
  int fold_index = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

/// k folds with disjoint test sets of round(n/7) ids each (at least one);
/// the remaining ids of every fold are reshuffled and split evenly between
/// training and validation, the odd one going to training.
std::vector<FoldSplit> kfold_split(std::vector<std::string> ids, int k, std::uint64_t seed);

/// "SPLIT1 fold=<k>" then train=, val=, test= lines of comma-separated ids.
std::string encode_split(const FoldSplit& split);

/// Throws std::logic_error if a test id leaks into training or validation.
void check_no_leakage(const FoldSplit& split);

enum class Method { kBaseline, kCurriculum, kMethod2 };

std::string to_string(Method m);
Method parse_method(std::string_view name);

struct ExperimentSpec {
  Method method = Method::kBaseline;
  /// Loss of the baseline stage, or of the curriculum stages (the first
  /// curriculum stage always uses cross-entropy).
  LossKind loss_kind = LossKind::kCrossEntropy;
  int stages = 1;
  int folds = 5;
  std::uint64_t seed = 0;
  NetConfig net;
  TrainConfig train;
  InferenceConfig inference;
  CurriculumConfig curriculum;

  void validate() const;
  /// Every field as key=value lines; the spec hash is taken over this text.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string hash() const;
};

struct FoldResult {
  FoldSplit split;
  ReliabilityReport test;
  /// Test report of the initial-stage model (curriculum runs only).
  std::optional<ReliabilityReport> initial_test;
  std::string history;  ///< curriculum stage history, empty otherwise
};

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> stddev;  ///< population standard deviation over folds
  int defined = 0;               ///< folds where the metric was defined
};

struct Aggregate {
  MetricSummary npv, tpr, ua, mean_iou;
};

/// Mean and standard deviation over folds; undefined values are skipped.
MetricSummary summarize(std::span<const std::optional<double>> values);
Aggregate aggregate(std::span<const ReliabilityReport> reports);

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<FoldResult> folds;
  Aggregate summary;
  std::filesystem::path run_dir;  ///< empty when nothing was persisted
};

/// Stage-1 models shared between experiments that would train them
/// identically (e.g. a CE baseline and a curriculum run with the same seed).
using ModelCache = std::map<std::string, ModelState>;

struct RunOptions {
  std::optional<std::filesystem::path> out_root;  ///< persist artifacts under this directory
  ModelCache* cache = nullptr;
  bool verbose = false;
};

/// Runs every fold of the experiment and aggregates the test reports.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::span<const LabeledImage> dataset,
                                const RunOptions& options = {});

/// Table row: "Method Stage Loss NPV TPR UA IoU" with mean ± std cells.
std::string table_header();
std::string table_row(const ExperimentSpec& spec, const Aggregate& agg);

std::string encode_aggregate(const Aggregate& agg);

}  // namespace bayesseg
