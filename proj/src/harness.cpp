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

#include "bayesseg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bayesseg/evaluate.hpp"
#include "bayesseg/io.hpp"

namespace bayesseg {

namespace fs = std::filesystem;

std::vector<FoldSplit> kfold_split(std::vector<std::string> ids, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("kfold_split: k must be >= 1");
  const auto n = static_cast<int>(ids.size());
  const int test_size = std::max(1, static_cast<int>(std::lround(n / 7.0)));
  if (n < k || test_size * k > n) {
    throw std::invalid_argument("kfold_split: " + std::to_string(n) + " ids cannot give " + std::to_string(k) +
                                " disjoint non-empty test sets");
  }
  if (n - test_size < 2) throw std::invalid_argument("kfold_split: too few ids for training and validation");
  {
    std::set<std::string> unique(ids.begin(), ids.end());
    if (unique.size() != ids.size()) throw std::invalid_argument("kfold_split: duplicate ids");
  }
  Rng rng(derive_seed(seed, 0x5EED));
  shuffle(ids, rng);

  std::vector<FoldSplit> folds;
  for (int f = 0; f < k; ++f) {
    FoldSplit split;
    split.fold_index = f;
    const auto begin = ids.begin() + static_cast<std::ptrdiff_t>(f) * test_size;
    split.test_ids.assign(begin, begin + test_size);
    std::vector<std::string> rest;
    for (const auto& id : ids) {
      if (std::find(split.test_ids.begin(), split.test_ids.end(), id) == split.test_ids.end()) rest.push_back(id);
    }
    Rng fold_rng(derive_seed(seed, 0x5EED + 1 + static_cast<std::uint64_t>(f)));
    shuffle(rest, fold_rng);
    const std::size_t n_train = (rest.size() + 1) / 2;
    split.train_ids.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val_ids.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_train), rest.end());
    check_no_leakage(split);
    folds.push_back(std::move(split));
  }
  return folds;
}

void check_no_leakage(const FoldSplit& split) {
  const std::set<std::string> test(split.test_ids.begin(), split.test_ids.end());
  std::set<std::string> train(split.train_ids.begin(), split.train_ids.end());
  for (const auto& id : split.train_ids) {
    if (test.count(id)) throw std::logic_error("fold " + std::to_string(split.fold_index) + ": test id " + id + " in training");
  }
  for (const auto& id : split.val_ids) {
    if (test.count(id)) throw std::logic_error("fold " + std::to_string(split.fold_index) + ": test id " + id + " in validation");
    if (train.count(id)) throw std::logic_error("fold " + std::to_string(split.fold_index) + ": id " + id + " in training and validation");
  }
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kBaseline: return "baseline";
    case Method::kCurriculum: return "curriculum";
    case Method::kMethod2: return "method2";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "baseline") return Method::kBaseline;
  if (name == "curriculum") return Method::kCurriculum;
  if (name == "method2") return Method::kMethod2;
  throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected baseline, curriculum, method2)");
}

void ExperimentSpec::validate() const {
  net.validate();
  train.validate();
  inference.validate();
  curriculum.validate();
  if (folds < 1) throw std::invalid_argument("folds must be >= 1");
  if (net.tile_size != inference.tile_size || net.tile_size != curriculum.tile_size) {
    throw std::invalid_argument("tile size must agree across network, inference and curriculum settings");
  }
  if (method == Method::kCurriculum && stages < 2) throw std::invalid_argument("curriculum requires stages >= 2");
  if (method == Method::kMethod2 && loss_kind != LossKind::kUncertainty) {
    throw std::invalid_argument("method2 requires the uncertainty loss");
  }
  if (method != Method::kMethod2 && loss_kind == LossKind::kUncertainty) {
    throw std::invalid_argument("the uncertainty loss is only used by method2");
  }
  if (method != Method::kCurriculum && stages != 1) throw std::invalid_argument("single-stage methods require stages = 1");
}

std::string ExperimentSpec::canonical() const {
  std::ostringstream o;
  o.precision(17);
  o << "method=" << to_string(method) << "\nloss=" << to_string(loss_kind) << "\nstages=" << stages
    << "\nfolds=" << folds << "\nseed=" << seed << "\nnet.depth=" << net.depth
    << "\nnet.base_channels=" << net.base_channels << "\nnet.dropout=" << net.dropout_rate
    << "\nnet.classes=" << net.num_classes << "\nnet.tile=" << net.tile_size << "\ntrain.lr_stage1=" << train.lr_stage1
    << "\ntrain.lr_curriculum=" << train.lr_curriculum << "\ntrain.beta1=" << train.beta1
    << "\ntrain.beta2=" << train.beta2 << "\ntrain.adam_epsilon=" << train.adam_epsilon
    << "\ntrain.batch=" << train.batch_size << "\ntrain.epochs=" << train.epochs_per_stage
    << "\ntrain.ss_weight=" << train.loss_params.ss_weight
    << "\ntrain.lambda=" << train.loss_params.uncertainty_lambda << "\ninference.stride=" << inference.stride
    << "\ninference.mc_samples=" << inference.mc_samples << "\ninference.threshold=" << inference.threshold
    << "\ninference.normalization=" << (inference.normalization == Normalization::kAnalytic ? "analytic" : "empirical")
    << "\ncurriculum.sigma=" << curriculum.sigma << "\ncurriculum.min_step=" << curriculum.min_step
    << "\ncurriculum.stop_epsilon=" << curriculum.stop_epsilon << "\n";
  return o.str();
}

std::string ExperimentSpec::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

MetricSummary summarize(std::span<const std::optional<double>> values) {
  MetricSummary s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++s.defined;
    }
  }
  if (s.defined == 0) return s;
  const double mean = sum / s.defined;
  double sq = 0.0;
  for (const auto& v : values) {
    if (v) sq += (*v - mean) * (*v - mean);
  }
  s.mean = mean;
  s.stddev = std::sqrt(sq / s.defined);
  return s;
}

Aggregate aggregate(std::span<const ReliabilityReport> reports) {
  std::vector<std::optional<double>> npv, tpr, ua, iou;
  for (const auto& r : reports) {
    npv.push_back(r.npv);
    tpr.push_back(r.tpr);
    ua.push_back(r.ua);
    iou.push_back(r.mean_iou);
  }
  return {summarize(npv), summarize(tpr), summarize(ua), summarize(iou)};
}

std::string encode_aggregate(const Aggregate& agg) {
  std::ostringstream o;
  o << "AGGREGATE1\n";
  auto put = [&](const char* name, const MetricSummary& s) {
    o << name << "_mean=" << format_metric(s.mean) << "\n"
      << name << "_std=" << format_metric(s.stddev) << "\n"
      << name << "_folds=" << s.defined << "\n";
  };
  put("npv", agg.npv);
  put("tpr", agg.tpr);
  put("ua", agg.ua);
  put("mean_iou", agg.mean_iou);
  return o.str();
}

std::string table_header() {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-11s %-5s %-12s %-15s %-15s %-15s %-15s", "Method", "Stage", "Loss", "NPV", "TPR",
                "UA", "IoU");
  return buf;
}

std::string table_row(const ExperimentSpec& spec, const Aggregate& agg) {
  auto cell = [](const MetricSummary& s) {
    if (!s.mean) return std::string("nan");
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f ± %.3f", *s.mean, *s.stddev);
    return std::string(buf);
  };
  // "±" is two bytes in UTF-8; pad by display width.
  auto pad = [](std::string s) {
    const std::size_t extra = s.find("±") != std::string::npos ? 1 : 0;
    if (s.size() < 15 + extra) s.append(15 + extra - s.size(), ' ');
    return s;
  };
  char head[64];
  std::snprintf(head, sizeof head, "%-11s %-5d %-12s ", to_string(spec.method).c_str(), spec.stages,
                to_string(spec.loss_kind).c_str());
  return std::string(head) + pad(cell(agg.npv)) + " " + pad(cell(agg.tpr)) + " " + pad(cell(agg.ua)) + " " +
         cell(agg.mean_iou);
}

std::string encode_split(const FoldSplit& s) {
  std::ostringstream o;
  o << "SPLIT1 fold=" << s.fold_index << "\n";
  auto put = [&](const char* name, const std::vector<std::string>& ids) {
    o << name << "=";
    for (std::size_t i = 0; i < ids.size(); ++i) o << (i ? "," : "") << ids[i];
    o << "\n";
  };
  put("train", s.train_ids);
  put("val", s.val_ids);
  put("test", s.test_ids);
  return o.str();
}

namespace {

std::vector<LabeledImage> select(std::span<const LabeledImage> dataset, const std::vector<std::string>& ids) {
  std::vector<LabeledImage> out;
  for (const auto& id : ids) {
    auto it = std::find_if(dataset.begin(), dataset.end(), [&](const LabeledImage& im) { return im.id == id; });
    if (it == dataset.end()) throw std::invalid_argument("dataset has no image '" + id + "'");
    out.push_back(*it);
  }
  return out;
}

// Key of an initial-stage model: everything that influences its training.
std::string stage1_key(const ExperimentSpec& spec, LossKind loss, const FoldSplit& split) {
  ExperimentSpec k = spec;
  k.method = Method::kBaseline;
  k.loss_kind = loss;
  k.stages = 1;
  k.train.lr_curriculum = 0.0;
  k.curriculum = CurriculumConfig{};
  return k.canonical() + encode_split(split);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, std::span<const LabeledImage> dataset,
                                const RunOptions& options) {
  spec.validate();
  std::vector<std::string> ids;
  for (const auto& im : dataset) ids.push_back(im.id);
  const auto splits = kfold_split(ids, spec.folds, spec.seed);

  ExperimentResult result;
  result.spec = spec;
  if (options.out_root) {
    result.run_dir = *options.out_root / (spec.hash() + "-s" + std::to_string(spec.seed));
    fs::create_directories(result.run_dir);
    std::ostringstream manifest;
    manifest << "MANIFEST1\n" << spec.canonical();
    for (const auto& s : splits) {
      manifest << "fold" << s.fold_index << ".sizes=" << s.train_ids.size() << ":" << s.val_ids.size() << ":"
               << s.test_ids.size() << "\n";
    }
    write_file_atomic(result.run_dir / "manifest.txt", manifest.str());
  }

  for (const auto& split : splits) {
    check_no_leakage(split);
    const auto train = select(dataset, split.train_ids);
    const auto val = select(dataset, split.val_ids);
    const auto test = select(dataset, split.test_ids);
    const auto fold = static_cast<std::uint64_t>(split.fold_index);

    const ModelState init = ModelState::initialize(spec.net, derive_seed(spec.seed, fold));
    TrainConfig tcfg = spec.train;
    tcfg.seed = derive_seed(spec.seed, 1000 + fold);
    InferenceConfig icfg = spec.inference;
    icfg.seed = derive_seed(spec.seed, 2000 + fold);

    auto initial_stage = [&](LossKind loss) {
      const auto key = stage1_key(spec, loss, split);
      if (options.cache) {
        if (auto it = options.cache->find(key); it != options.cache->end()) return it->second;
      }
      TrainConfig c = tcfg;
      c.loss_kind = loss;
      const auto tiles = grid_tiles(train, icfg.tile_size, icfg.stride);
      const auto vtiles = grid_tiles(val, icfg.tile_size, icfg.stride);
      ModelState m = train_stage(init, tiles, vtiles, c, c.lr_stage1);
      if (options.cache) options.cache->emplace(key, m);
      return m;
    };

    FoldResult fr;
    fr.split = split;
    ModelState model;
    switch (spec.method) {
      case Method::kBaseline:
        model = initial_stage(spec.loss_kind);
        break;
      case Method::kCurriculum: {
        const ModelState first = initial_stage(LossKind::kCrossEntropy);
        fr.initial_test = evaluate_images(first, test, icfg);
        CurriculumConfig ccfg = spec.curriculum;
        ccfg.max_stages = spec.stages;
        TrainConfig c = tcfg;
        c.loss_kind = spec.loss_kind;
        const auto cres = run_curriculum(first, train, val, ccfg, c, icfg);
        fr.history = encode_history(cres);
        model = cres.model;
        if (options.out_root) {
          for (const auto& plan : cres.plans) {
            write_file_atomic(result.run_dir / ("fold" + std::to_string(fold)) / ("plan_" + plan.source_image_id + ".txt"),
                              encode_plan(plan));
          }
        }
        break;
      }
      case Method::kMethod2: {
        TrainConfig c = tcfg;
        c.loss_kind = spec.loss_kind;
        model = train_method2(init, train, val, c, icfg);
        break;
      }
    }
    fr.test = evaluate_images(model, test, icfg);
    if (options.verbose) {
      std::clog << to_string(spec.method) << "/" << to_string(spec.loss_kind) << " fold " << fold
                << ": UA=" << format_metric(fr.test.ua, 4) << " NPV=" << format_metric(fr.test.npv, 4)
                << " TPR=" << format_metric(fr.test.tpr, 4) << " IoU=" << format_metric(fr.test.mean_iou, 4) << "\n";
    }
    if (options.out_root) {
      const auto dir = result.run_dir / ("fold" + std::to_string(fold));
      write_file_atomic(dir / "split.txt", encode_split(split));
      write_file_atomic(dir / "report.txt", encode_report(fr.test));
      if (fr.initial_test) write_file_atomic(dir / "initial_report.txt", encode_report(*fr.initial_test));
      if (!fr.history.empty()) write_file_atomic(dir / "history.txt", fr.history);
      save_model(dir / "model.bnet", model);
    }
    result.folds.push_back(std::move(fr));
  }

  std::vector<ReliabilityReport> reports;
  for (const auto& f : result.folds) reports.push_back(f.test);
  result.summary = aggregate(reports);
  if (options.out_root) {
    write_file_atomic(result.run_dir / "aggregate.txt", encode_aggregate(result.summary));
    write_file_atomic(result.run_dir / "table.txt", table_header() + "\n" + table_row(spec, result.summary) + "\n");
  }
  return result;
}

}  // namespace bayesseg
