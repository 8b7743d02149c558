// Copyright 2026 The crdr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "crdr/discriminator.hpp"
#include "crdr/error.hpp"

namespace crdr {
namespace {

DiscriminatorConfig Small(DesignKind kind, int levels = 5) {
  DiscriminatorConfig c;
  c.kind = kind;
  c.num_levels = levels;
  c.widths = {8, 16, 16, 16};
  return c;
}

TEST(Condition, OneHotChannel) {
  const auto c = MakeCondition(2, 2, 2, 5);
  EXPECT_EQ(c.sizes(), (std::vector<std::int64_t>{1, 5, 2, 2}));
  EXPECT_TRUE(torch::equal(c[0][2], torch::ones({2, 2})));
  EXPECT_TRUE(torch::equal(c.sum(1), torch::ones({1, 2, 2})));
  EXPECT_EQ(MakeCondition(0, 3, 3, 4)[0][0].sum().item<float>(), 9.0f);
}

TEST(Condition, OutOfRangeIsDomainError) {
  EXPECT_THROW(MakeCondition(5, 2, 2, 5), DomainError);
  EXPECT_THROW(MakeCondition(-1, 2, 2, 5), DomainError);
}

TEST(DesignKind, NamesRoundTrip) {
  for (auto k : kAllDesigns) EXPECT_EQ(ParseDesignKind(ToString(k)), k);
  EXPECT_THROW(ParseDesignKind("bogus"), DomainError);
}

class ZooTest : public ::testing::TestWithParam<DesignKind> {};

TEST_P(ZooTest, ScoreMapIsSixteenthOfInput) {
  torch::manual_seed(0);
  Discriminator d(Small(GetParam()));
  EXPECT_EQ(d->forward(torch::rand({2, 3, 64, 64}), 1).sizes(),
            (std::vector<std::int64_t>{2, 1, 4, 4}));
  EXPECT_EQ(d->forward(torch::rand({1, 3, 96, 128}), 4).sizes(),
            (std::vector<std::int64_t>{1, 1, 6, 8}));
  EXPECT_EQ(d->forward(torch::rand({1, 3, 16, 16}), 0).sizes(),
            (std::vector<std::int64_t>{1, 1, 1, 1}));
}

TEST_P(ZooTest, RejectsBadInput) {
  Discriminator d(Small(GetParam()));
  EXPECT_THROW(d->forward(torch::rand({1, 3, 60, 64}), 0), DimensionError);
  EXPECT_THROW(d->forward(torch::rand({1, 3, 64, 64}), 5), DomainError);
  EXPECT_THROW(d->forward(torch::rand({1, 3, 64, 64}), -1), DomainError);
}

TEST_P(ZooTest, ConditionSensitivity) {
  torch::manual_seed(3);
  Discriminator d(Small(GetParam()));
  const auto x = torch::rand({1, 3, 64, 64});
  const bool same = torch::equal(d->forward(x, 0), d->forward(x, 4));
  EXPECT_EQ(same, GetParam() == DesignKind::kSharedNoCond);
}

INSTANTIATE_TEST_SUITE_P(AllDesigns, ZooTest, ::testing::ValuesIn(kAllDesigns),
                         [](const auto& info) { return ToString(info.param); });

TEST(Zoo, IndependentGradientIsolation) {
  torch::manual_seed(4);
  Discriminator d(Small(DesignKind::kIndependent));
  const auto x = torch::rand({2, 3, 32, 32});
  for (int q = 0; q < 5; ++q) {
    d->zero_grad();
    d->forward(x, q).square().sum().backward();
    for (int j = 0; j < 5; ++j) {
      for (const auto& p : d->LevelParameters(j)) {
        const bool zero = !p.grad().defined() || torch::equal(p.grad(), torch::zeros_like(p));
        EXPECT_EQ(zero, j != q) << "q=" << q << " j=" << j;
      }
    }
  }
}

TEST(Zoo, ParamReportRelations) {
  auto base_cfg = Small(DesignKind::kIndependent, 1);
  const auto single = Discriminator(base_cfg)->Report().total;
  const auto indep = Discriminator(Small(DesignKind::kIndependent))->Report();
  EXPECT_EQ(indep.total, 5 * single);
  EXPECT_EQ(indep.shared, 0);
  ASSERT_EQ(indep.per_level.size(), 5u);
  for (auto n : indep.per_level) EXPECT_EQ(n, single);

  const auto shared = Discriminator(Small(DesignKind::kShared))->Report();
  const auto no_cond = Discriminator(Small(DesignKind::kSharedNoCond))->Report();
  // Q extra input channels into a 3x3 conv with widths[0] outputs.
  EXPECT_EQ(shared.total - no_cond.total, 5 * 3 * 3 * 8);
  EXPECT_TRUE(shared.per_level.empty());

  const auto head = Discriminator(Small(DesignKind::kHybridHead))->Report();
  EXPECT_LT(head.total, indep.total);
  EXPECT_GT(head.shared, 0);
  const auto backbone = Discriminator(Small(DesignKind::kHybridBackbone))->Report();
  EXPECT_LT(backbone.total, head.total);
  EXPECT_EQ(backbone.per_level.size(), 5u);
}

TEST(Zoo, ReportMatchesParameterCount) {
  for (auto k : kAllDesigns) {
    Discriminator d(Small(k));
    std::int64_t n = 0;
    for (const auto& p : d->parameters()) n += p.numel();
    EXPECT_EQ(d->Report().total, n) << ToString(k);
  }
}

}  // namespace
}  // namespace crdr
