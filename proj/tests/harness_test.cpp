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

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "bayesseg/evaluate.hpp"
#include "bayesseg/io.hpp"
#include "test_util.hpp"

namespace bayesseg {
namespace {

std::vector<std::string> make_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
  return ids;
}

TEST(KfoldTest, ThirtyFiveIdsGiveFifteenFifteenFive) {
  const auto folds = kfold_split(make_ids(35), 5, 1);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::string> tested;
  for (const auto& f : folds) {
    EXPECT_EQ(f.train_ids.size(), 15u);
    EXPECT_EQ(f.val_ids.size(), 15u);
    EXPECT_EQ(f.test_ids.size(), 5u);
    std::set<std::string> all(f.train_ids.begin(), f.train_ids.end());
    all.insert(f.val_ids.begin(), f.val_ids.end());
    all.insert(f.test_ids.begin(), f.test_ids.end());
    EXPECT_EQ(all.size(), 35u);  // disjoint and complete
    EXPECT_NO_THROW(check_no_leakage(f));
    for (const auto& id : f.test_ids) EXPECT_TRUE(tested.insert(id).second) << id << " tested twice";
  }
}

TEST(KfoldTest, SeededAndProportional) {
  const auto a = kfold_split(make_ids(12), 5, 7);
  const auto b = kfold_split(make_ids(12), 5, 7);
  const auto c = kfold_split(make_ids(12), 5, 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].train_ids, b[i].train_ids);
    EXPECT_EQ(a[i].test_ids, b[i].test_ids);
    EXPECT_EQ(a[i].test_ids.size(), 2u);  // round(12 / 7)
    EXPECT_EQ(a[i].train_ids.size(), 5u);
    EXPECT_EQ(a[i].val_ids.size(), 5u);
  }
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].test_ids != c[i].test_ids;
  EXPECT_TRUE(differs);
}

TEST(KfoldTest, RejectsImpossibleSplits) {
  EXPECT_THROW(kfold_split(make_ids(4), 5, 1), std::invalid_argument);
  EXPECT_THROW(kfold_split(make_ids(2), 1, 1), std::invalid_argument);
  EXPECT_THROW(kfold_split({"a", "a", "b", "c", "d", "e", "f"}, 2, 1), std::invalid_argument);
}

TEST(KfoldTest, LeakageDetected) {
  FoldSplit s{0, {"a", "b"}, {"c"}, {"b"}};
  EXPECT_THROW(check_no_leakage(s), std::logic_error);
}

TEST(SummaryTest, PopulationStdAndSkipsUndefined) {
  const std::vector<std::optional<double>> v{0.5, std::nullopt, 0.7, 0.9};
  const auto s = summarize(v);
  EXPECT_EQ(s.defined, 3);
  EXPECT_NEAR(*s.mean, 0.7, 1e-15);
  EXPECT_NEAR(*s.stddev, std::sqrt((0.04 + 0.0 + 0.04) / 3), 1e-15);
  EXPECT_FALSE(summarize(std::vector<std::optional<double>>{std::nullopt}).mean.has_value());
}

TEST(SpecTest, ValidationRules) {
  ExperimentSpec spec;
  EXPECT_NO_THROW(spec.validate());
  spec.method = Method::kCurriculum;
  spec.stages = 1;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec.stages = 2;
  EXPECT_NO_THROW(spec.validate());
  spec.method = Method::kMethod2;
  spec.stages = 1;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec.loss_kind = LossKind::kUncertainty;
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(parse_method(to_string(Method::kCurriculum)), Method::kCurriculum);
}

TEST(SpecTest, HashTracksEveryField) {
  ExperimentSpec a, b;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.inference.threshold = 0.4;
  EXPECT_NE(a.hash(), b.hash());
  b = a;
  b.train.lr_curriculum = 2e-6;
  EXPECT_NE(a.hash(), b.hash());
}

ExperimentSpec tiny_spec() {
  ExperimentSpec spec;
  spec.folds = 2;
  spec.seed = 4;
  spec.net = tiny_net();
  spec.inference = tiny_inference();
  spec.curriculum.tile_size = 16;
  spec.train.lr_stage1 = 5e-3;
  spec.train.lr_curriculum = 1e-3;
  spec.train.batch_size = 4;
  spec.train.epochs_per_stage = 2;
  return spec;
}

TEST(RunExperimentTest, ZeroEpochsEvaluatesTheInitialModel) {
  const auto data = tiny_dataset(7, 3);
  auto spec = tiny_spec();
  spec.train.epochs_per_stage = 0;
  const auto result = run_experiment(spec, data);
  ASSERT_EQ(result.folds.size(), 2u);
  for (const auto& f : result.folds) {
    const auto fold = static_cast<std::uint64_t>(f.split.fold_index);
    const auto init = ModelState::initialize(spec.net, derive_seed(spec.seed, fold));
    auto icfg = spec.inference;
    icfg.seed = derive_seed(spec.seed, 2000 + fold);
    std::vector<LabeledImage> test;
    for (const auto& id : f.split.test_ids)
      test.push_back(*std::find_if(data.begin(), data.end(), [&](const LabeledImage& im) { return im.id == id; }));
    const auto want = evaluate_images(init, test, icfg);
    EXPECT_EQ(f.test.counts, want.counts);
    EXPECT_EQ(f.test.iou_counts, want.iou_counts);
  }
}

TEST(RunExperimentTest, Method2MatchesDirectTraining) {
  const auto data = tiny_dataset(7, 3);
  auto spec = tiny_spec();
  spec.method = Method::kMethod2;
  spec.loss_kind = LossKind::kUncertainty;
  spec.folds = 1;
  const auto result = run_experiment(spec, data);
  ASSERT_EQ(result.folds.size(), 1u);
  const auto& split = result.folds[0].split;
  auto pick = [&](const std::vector<std::string>& ids) {
    std::vector<LabeledImage> out;
    for (const auto& id : ids)
      out.push_back(*std::find_if(data.begin(), data.end(), [&](const LabeledImage& im) { return im.id == id; }));
    return out;
  };
  auto tcfg = spec.train;
  tcfg.seed = derive_seed(spec.seed, 1000);
  tcfg.loss_kind = LossKind::kUncertainty;
  auto icfg = spec.inference;
  icfg.seed = derive_seed(spec.seed, 2000);
  const auto model = train_method2(ModelState::initialize(spec.net, derive_seed(spec.seed, 0)), pick(split.train_ids),
                                   pick(split.val_ids), tcfg, icfg);
  const auto want = evaluate_images(model, pick(split.test_ids), icfg);
  EXPECT_EQ(result.folds[0].test.counts, want.counts);
  EXPECT_EQ(result.folds[0].test.iou_counts, want.iou_counts);
}

TEST(RunExperimentTest, PersistedReportsReproduceAggregate) {
  const auto data = tiny_dataset(7, 3);
  TempDir dir;
  auto spec = tiny_spec();
  spec.method = Method::kCurriculum;
  spec.stages = 2;
  RunOptions opts;
  opts.out_root = dir.path();
  const auto result = run_experiment(spec, data, opts);
  ASSERT_TRUE(std::filesystem::exists(result.run_dir / "manifest.txt"));
  EXPECT_EQ(result.run_dir.filename().string(), spec.hash() + "-s4");

  std::vector<ReliabilityReport> reloaded;
  for (int k = 0; k < 2; ++k) {
    const auto fold_dir = result.run_dir / ("fold" + std::to_string(k));
    reloaded.push_back(decode_report(read_file(fold_dir / "report.txt")));
    EXPECT_TRUE(std::filesystem::exists(fold_dir / "history.txt"));
    EXPECT_TRUE(std::filesystem::exists(fold_dir / "initial_report.txt"));
    EXPECT_TRUE(std::filesystem::exists(fold_dir / "model.bnet"));
  }
  EXPECT_EQ(encode_aggregate(aggregate(reloaded)), read_file(result.run_dir / "aggregate.txt"));
  EXPECT_EQ(encode_aggregate(aggregate(reloaded)), encode_aggregate(result.summary));
  const auto table = read_file(result.run_dir / "table.txt");
  EXPECT_NE(table.find("NPV"), std::string::npos);
  EXPECT_NE(table.find("±"), std::string::npos);
}

TEST(RunExperimentTest, CacheSharesStageOneModels) {
  const auto data = tiny_dataset(7, 3);
  ModelCache cache;
  RunOptions opts;
  opts.cache = &cache;
  auto base = tiny_spec();
  const auto a = run_experiment(base, data, opts);
  EXPECT_EQ(cache.size(), 2u);
  auto cur = tiny_spec();
  cur.method = Method::kCurriculum;
  cur.stages = 2;
  const auto b = run_experiment(cur, data, opts);
  EXPECT_EQ(cache.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(b.folds[i].initial_test->counts, a.folds[i].test.counts);
  const auto uncached = run_experiment(base, data);
  EXPECT_EQ(encode_aggregate(uncached.summary), encode_aggregate(a.summary));
}

}  // namespace
}  // namespace bayesseg
