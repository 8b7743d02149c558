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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "../test_support.hpp"
#include "crdr/error.hpp"
#include "crdr/evaluation.hpp"
#include "crdr/perceptual.hpp"

namespace crdr {
namespace {

using testing::TempDir;
using testing::TinyModel;

TEST(Psnr, IdenticalImagesHitTheCap) {
  const auto x = torch::rand({1, 3, 8, 8});
  EXPECT_EQ(Psnr(x, x), 100.0);
  EXPECT_EQ(PsnrFromMse(0.0), 100.0);
}

TEST(Psnr, UniformDifferenceOfSixteen) {
  const auto x = torch::full({1, 3, 16, 16}, 100.0 / 255.0, torch::kDouble);
  const auto y = x + 16.0 / 255.0;
  EXPECT_NEAR(Psnr(x, y), 10.0 * std::log10(255.0 * 255.0 / 256.0), 1e-9);
  EXPECT_NEAR(Psnr(x, y), 24.05, 0.005);
}

TEST(Psnr, HalvingMseAddsThreeDecibels) {
  for (double mse : {0.5, 10.0, 400.0}) {
    EXPECT_NEAR(PsnrFromMse(mse / 2) - PsnrFromMse(mse), 3.0103, 1e-4);
  }
}

TEST(Psnr, ShapeMismatch) {
  EXPECT_THROW(Psnr(torch::rand({1, 3, 4, 4}), torch::rand({1, 3, 4, 5})), DimensionError);
}

TEST(Bpp, Examples) {
  EXPECT_NEAR(Bpp(1000, 256, 256), 0.12207, 1e-5);
  EXPECT_DOUBLE_EQ(Bpp(2000, 256, 256), 2 * Bpp(1000, 256, 256));
  EXPECT_GT(Bpp(17, 64, 64), 0.0);
  EXPECT_THROW(Bpp(10, 0, 5), DomainError);
}

TEST(StableMean, OrderIndependent) {
  std::vector<double> v;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) v.push_back(u(rng));
  v.push_back(1e-9);
  const double m = StableMean(v);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(StableMean(v), m);
  }
  EXPECT_EQ(StableMean({2.0, 4.0}), 3.0);
}

TEST(SweepPoints, RowCounts) {
  EXPECT_EQ(SweepPoints(5, 0.25).size(), 17u);
  EXPECT_EQ(SweepPoints(3, 0.25).size(), 9u);
  EXPECT_EQ(SweepPoints(1, 0.25), std::vector<double>{0.0});
  const auto p = SweepPoints(3, 0.3);
  EXPECT_EQ(p.front(), 0.0);
  EXPECT_EQ(p.back(), 2.0);
  EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
  EXPECT_THROW(SweepPoints(3, 0.0), DomainError);
}

TEST(Spearman, RanksAndTies) {
  EXPECT_DOUBLE_EQ(Spearman({1, 2, 3, 4}, {10, 20, 30, 45}), 1.0);
  EXPECT_DOUBLE_EQ(Spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  // Average ranks: b = {1, 2.5, 2.5, 4}.
  const double r = Spearman({1, 2, 3, 4}, {1, 5, 5, 9});
  EXPECT_NEAR(r, 4.5 / std::sqrt(5.0 * 4.5), 1e-12);
}

TEST(Histogram, CountsConservedAndEdgesSpanData) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x, y;
  for (int i = 0; i < 777; ++i) {
    x.push_back(n(rng));
    y.push_back(n(rng));
  }
  const auto h = BuildHistogram(x, y, 20, 10);
  EXPECT_EQ(h.bins_x(), 20);
  EXPECT_EQ(h.bins_y(), 10);
  EXPECT_EQ(h.total(), 777);
  EXPECT_EQ(h.x_edges.front(), *std::min_element(x.begin(), x.end()));
  EXPECT_EQ(h.x_edges.back(), *std::max_element(x.begin(), x.end()));
  for (auto c : h.counts) EXPECT_GE(c, 0);
}

TEST(Histogram, ConstantData) {
  const auto h = BuildHistogram({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 4, 4);
  EXPECT_EQ(h.total(), 3);
}

TEST(Export, CsvSchemaAndByteIdentical) {
  const std::vector<RdPoint> rows = {{0.0, 0.1, 25.0, 0.3}, {0.25, 0.2, 26.5, 0.25}};
  const std::string csv = SweepCsv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "q_frac,bpp,psnr,perceptual");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(SweepCsv(rows), csv);

  TempDir dir("export");
  WriteText(dir.file("a.csv"), csv);
  WriteText(dir.file("b.csv"), SweepCsv(rows));
  std::ifstream a(dir.file("a.csv")), b(dir.file("b.csv"));
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa, csv);

  PlotSweep(dir.file("plot.png"), rows);
  EXPECT_GT(std::filesystem::file_size(dir.file("plot.png")), 0u);
  const auto h = BuildHistogram({1, 2, 3}, {3, 2, 1}, 3, 3);
  PlotHistogram(dir.file("hist.png"), h);
  EXPECT_TRUE(std::filesystem::exists(dir.file("hist.png")));
  const std::string hc = HistogramCsv(h);
  EXPECT_EQ(hc.substr(0, hc.find('\n')), "mse_lo,mse_hi,score_lo,score_hi,count");
  EXPECT_EQ(std::count(hc.begin(), hc.end(), '\n'), 10);
}

class ModelEvalTest : public ::testing::Test {
 protected:
  void SetUp() override {
    torch::manual_seed(8);
    model_ = NicModel(TinyModel(3));
    DiscriminatorConfig dc;
    dc.num_levels = 3;
    dc.widths = {8, 16, 16, 16};
    disc_ = Discriminator(dc);
    metric_ = FeatureStackMetric::FromSeed(1);
    for (std::int64_t s : {64, 80}) images_.push_back(torch::rand({1, 3, s, s + 8}));
  }
  NicModel model_{nullptr};
  Discriminator disc_{nullptr};
  std::unique_ptr<PerceptualMetric> metric_;
  std::vector<torch::Tensor> images_;
};

TEST_F(ModelEvalTest, RganZeroPointOnPerfectReconstruction) {
  const auto x = torch::rand({2, 3, 64, 64});
  const auto s = RelativeRealityScore(disc_, x, x, 1);
  EXPECT_EQ(s.sizes(), (std::vector<std::int64_t>{2}));
  EXPECT_TRUE(torch::equal(s, torch::zeros_like(s)));
}

TEST_F(ModelEvalTest, SweepRows) {
  const auto rows = Sweep(model_, *metric_, images_, RealismWeight(0.0), 0.5);
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(rows[i].q_frac, 0.5 * static_cast<double>(i));
    EXPECT_GT(rows[i].bpp, 0.0);
    EXPECT_TRUE(std::isfinite(rows[i].psnr));
    EXPECT_GE(rows[i].perceptual, 0.0);
  }
}

TEST_F(ModelEvalTest, RealityHistogramCountsAndExclusion) {
  RealityConfig cfg;
  cfg.crops = 24;
  cfg.bins = 5;
  cfg.seed = 3;
  const auto rgan = RealityHistogram(model_, disc_, images_, cfg);
  EXPECT_EQ(rgan.excluded, 0);
  EXPECT_EQ(rgan.samples.size(), 24u);
  EXPECT_EQ(rgan.histogram.total(), 24);

  cfg.kind = AdvKind::kHrrgan;
  const auto hr = RealityHistogram(model_, disc_, images_, cfg);
  EXPECT_EQ(static_cast<std::int64_t>(hr.samples.size()) + hr.excluded, 24);
  EXPECT_GT(hr.excluded, 0);
  EXPECT_EQ(hr.histogram.total(), static_cast<std::int64_t>(hr.samples.size()));
  for (const auto& s : hr.samples) EXPECT_LT(s.q, 2);

  // Same seed, same crops.
  const auto again = RealityHistogram(model_, disc_, images_, cfg);
  EXPECT_EQ(RealitySamplesCsv(again.samples), RealitySamplesCsv(hr.samples));

  cfg.kind = AdvKind::kSgan;
  EXPECT_THROW(RealityHistogram(model_, disc_, images_, cfg), DomainError);
}

}  // namespace
}  // namespace crdr
