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

#include "bayesseg/metrics.hpp"

#include <gtest/gtest.h>

#include "bayesseg/random.hpp"

namespace bayesseg {
namespace {

struct Fixture {
  LabelMap pred, truth;
  CertaintyMask mask;
};

// 10 pixels: 4 incorrect&uncertain, 2 correct&uncertain, 3 correct&certain,
// 1 incorrect&certain.
Fixture hand_case() {
  Fixture f{LabelMap(10, 1), LabelMap(10, 1), CertaintyMask(10, 1)};
  f.truth.data = {0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  f.pred.data = {1, 2, 0, 1, 1, 2, 0, 1, 2, 2};
  f.mask.data = {0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
  return f;
}

Fixture random_fixture(Rng& rng, int w, int h) {
  Fixture f{LabelMap(w, h), LabelMap(w, h), CertaintyMask(w, h)};
  for (std::size_t i = 0; i < f.pred.data.size(); ++i) {
    f.truth.data[i] = static_cast<std::uint8_t>(rng.integer(0, 2));
    f.pred.data[i] = rng.uniform() < 0.7 ? f.truth.data[i] : static_cast<std::uint8_t>(rng.integer(0, 2));
    f.mask.data[i] = rng.uniform() < 0.6;
  }
  return f;
}

TEST(ConfusionTest, HandCase) {
  const auto f = hand_case();
  const auto c = confusion(f.pred, f.truth, f.mask);
  EXPECT_EQ(c, (ReliabilityCounts{4, 2, 3, 1}));
  EXPECT_DOUBLE_EQ(*npv(c), 0.75);
  EXPECT_DOUBLE_EQ(*tpr(c), 0.8);
  EXPECT_DOUBLE_EQ(*ua(c), 0.7);
}

TEST(ConfusionTest, TrivialCases) {
  LabelMap a(4, 1);
  a.data = {0, 1, 2, 1};
  LabelMap b = a;
  for (auto& v : b.data) v = static_cast<std::uint8_t>((v + 1) % 3);
  CertaintyMask certain(4, 1), uncertain(4, 1);
  std::fill(certain.data.begin(), certain.data.end(), 1);
  EXPECT_EQ(confusion(a, a, certain), (ReliabilityCounts{0, 0, 4, 0}));
  EXPECT_EQ(confusion(b, a, uncertain), (ReliabilityCounts{4, 0, 0, 0}));
  EXPECT_DOUBLE_EQ(*npv(confusion(a, a, certain)), 1.0);
  EXPECT_DOUBLE_EQ(*tpr(confusion(b, a, uncertain)), 1.0);
  EXPECT_DOUBLE_EQ(*ua(ReliabilityCounts{3, 0, 5, 0}), 1.0);
  EXPECT_THROW(confusion(a, LabelMap(3, 1), certain), std::invalid_argument);
}

TEST(ConfusionTest, UndefinedRatiosAreNotValues) {
  EXPECT_FALSE(npv(ReliabilityCounts{3, 2, 0, 0}).has_value());
  EXPECT_FALSE(tpr(ReliabilityCounts{0, 2, 5, 0}).has_value());
  EXPECT_FALSE(ua(ReliabilityCounts{}).has_value());
  EXPECT_EQ(format_metric(std::nullopt), "nan");
}

TEST(ConfusionTest, PropertiesOnRandomFixtures) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = random_fixture(rng, 9, 7);
    const auto c = confusion(f.pred, f.truth, f.mask);
    EXPECT_EQ(c.total(), 63u);
    for (auto v : {npv(c), tpr(c), ua(c)}) {
      if (v) {
        EXPECT_GE(*v, 0.0);
        EXPECT_LE(*v, 1.0);
      }
    }
    // Same permutation of class labels on both maps.
    Fixture p = f;
    const std::uint8_t perm[3] = {2, 0, 1};
    for (auto& v : p.pred.data) v = perm[v];
    for (auto& v : p.truth.data) v = perm[v];
    EXPECT_EQ(confusion(p.pred, p.truth, p.mask), c);
    // Partial counts over the two halves merge to the whole.
    Fixture top{LabelMap(9, 3), LabelMap(9, 3), CertaintyMask(9, 3)};
    Fixture bot{LabelMap(9, 4), LabelMap(9, 4), CertaintyMask(9, 4)};
    std::copy_n(f.pred.data.begin(), 27, top.pred.data.begin());
    std::copy_n(f.truth.data.begin(), 27, top.truth.data.begin());
    std::copy_n(f.mask.data.begin(), 27, top.mask.data.begin());
    std::copy(f.pred.data.begin() + 27, f.pred.data.end(), bot.pred.data.begin());
    std::copy(f.truth.data.begin() + 27, f.truth.data.end(), bot.truth.data.begin());
    std::copy(f.mask.data.begin() + 27, f.mask.data.end(), bot.mask.data.begin());
    ReliabilityCounts merged = confusion(top.pred, top.truth, top.mask);
    merged += confusion(bot.pred, bot.truth, bot.mask);
    EXPECT_EQ(merged, c);
  }
}

TEST(ConfusionTest, AllCertainMaskGivesAccuracyAsNpv) {
  Rng rng(2);
  const auto f = random_fixture(rng, 10, 10);
  CertaintyMask all(10, 10);
  std::fill(all.data.begin(), all.data.end(), 1);
  const auto c = confusion(f.pred, f.truth, all);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 100; ++i) correct += f.pred.data[i] == f.truth.data[i];
  EXPECT_DOUBLE_EQ(*npv(c), static_cast<double>(correct) / 100.0);
  const auto t = tpr(c);
  EXPECT_TRUE(!t || *t == 0.0);
}

TEST(IouTest, Examples) {
  LabelMap pred(4, 1), truth(4, 1);
  pred.data = {0, 0, 1, 1};
  truth.data = {0, 1, 1, 1};
  const auto r = iou(pred, truth, 3);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 0.5);
  EXPECT_DOUBLE_EQ(*r.per_class[1], 2.0 / 3.0);
  EXPECT_FALSE(r.per_class[2].has_value());
  EXPECT_DOUBLE_EQ(*r.mean, (0.5 + 2.0 / 3.0) / 2);

  const auto same = iou(truth, truth, 2);
  EXPECT_DOUBLE_EQ(*same.per_class[0], 1.0);
  EXPECT_DOUBLE_EQ(*same.per_class[1], 1.0);

  LabelMap zeros(3, 1), twos(3, 1);
  twos.data = {2, 2, 2};
  const auto disjoint = iou(zeros, twos, 3);
  EXPECT_DOUBLE_EQ(*disjoint.per_class[0], 0.0);
  EXPECT_DOUBLE_EQ(*disjoint.per_class[2], 0.0);
  EXPECT_THROW(iou(pred, LabelMap(2, 2), 3), std::invalid_argument);
}

TEST(ReportTest, RoundTripRecomputesExactly) {
  Rng rng(3);
  ReliabilityAccumulator acc(3);
  for (int i = 0; i < 3; ++i) {
    const auto f = random_fixture(rng, 8, 6);
    acc.add(f.pred, f.truth, f.mask);
  }
  const auto report = acc.report();
  const auto text = encode_report(report);
  ASSERT_EQ(text.rfind("REPORT1\n", 0), 0u);
  const auto back = decode_report(text);
  EXPECT_EQ(back.counts, report.counts);
  EXPECT_EQ(back.iou_counts, report.iou_counts);
  EXPECT_EQ(back.npv, report.npv);
  EXPECT_EQ(back.tpr, report.tpr);
  EXPECT_EQ(back.ua, report.ua);
  EXPECT_EQ(back.mean_iou, report.mean_iou);
  EXPECT_EQ(encode_report(back), text);
  EXPECT_THROW(decode_report("REPORT1\ntp=x\n"), std::exception);
}

}  // namespace
}  // namespace bayesseg
