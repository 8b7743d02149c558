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

#include <random>

#include "crdr/entropy.hpp"
#include "crdr/error.hpp"
#include "crdr/range_coder.hpp"

namespace crdr {
namespace {

std::vector<std::int32_t> Draw(std::mt19937_64& rng, const CdfTable& t, std::size_t n) {
  // Sample from the table's own distribution.
  std::uniform_int_distribution<std::uint32_t> u(0, kCdfTotal - 1);
  std::vector<std::int32_t> s(n);
  for (auto& v : s) v = t.Lookup(u(rng));
  return s;
}

TEST(RangeCoder, EmptyStream) {
  const auto t = BuildCdf(DensityFamily::kLogistic, {0.0, 1.0});
  const auto bytes = RangeEncode(std::span<const std::int32_t>{}, t);
  EXPECT_TRUE(bytes.empty());
  EXPECT_TRUE(RangeDecode(bytes, t, 0).empty());
}

TEST(RangeCoder, SingleSymbol) {
  const auto t = BuildCdf(DensityFamily::kLogistic, {0.0, 1.0});
  const std::vector<std::int32_t> s = {3};
  EXPECT_EQ(RangeDecode(RangeEncode(s, t), t, 1), s);
}

TEST(RangeCoder, ExtremeSymbolsRoundTrip) {
  const auto t = BuildCdf(DensityFamily::kLogistic, {0.0, 0.05}, SymbolBounds{-2048, 2048});
  std::vector<std::int32_t> s;
  for (int i = 0; i < 500; ++i) s.push_back(i % 2 ? -2048 : 2048);
  for (int i = 0; i < 500; ++i) s.push_back(0);
  EXPECT_EQ(RangeDecode(RangeEncode(s, t), t, s.size()), s);
}

TEST(RangeCoder, RandomRoundTrips) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> loc(-10, 10), logscale(-3, 5);
  std::uniform_int_distribution<std::size_t> len(0, 300);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto t = BuildCdf(trial % 3 ? DensityFamily::kLogistic : DensityFamily::kNormal,
                            {loc(rng), std::exp(logscale(rng))});
    std::vector<std::int32_t> s;
    if (trial % 4 == 0) {
      std::uniform_int_distribution<std::int32_t> any(t.bounds.min, t.bounds.max);
      s.resize(len(rng));
      for (auto& v : s) v = any(rng);
    } else {
      s = Draw(rng, t, len(rng));
    }
    ASSERT_EQ(RangeDecode(RangeEncode(s, t), t, s.size()), s) << "trial " << trial;
  }
}

TEST(RangeCoder, OutOfRangeSymbolIsEncodeError) {
  const auto t = BuildCdf(DensityFamily::kLogistic, {0.0, 1.0});
  const std::vector<std::int32_t> s = {t.bounds.max + 1};
  EXPECT_THROW(RangeEncode(s, t), EncodeError);
}

TEST(RangeCoder, TruncationIsDecodeError) {
  std::mt19937_64 rng(2);
  const auto t = BuildCdf(DensityFamily::kLogistic, {0.0, 4.0});
  const auto s = Draw(rng, t, 2000);
  auto bytes = RangeEncode(s, t);
  ASSERT_GT(bytes.size(), 8u);
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(RangeDecode(bytes, t, s.size()), DecodeError);
  EXPECT_THROW(RangeDecode(std::vector<std::uint8_t>{1, 2}, t, 1), DecodeError);
}

TEST(RangeCoder, TrailingBytesAreDecodeError) {
  const auto t = BuildCdf(DensityFamily::kLogistic, {0.0, 1.0});
  const std::vector<std::int32_t> s = {0, 1, -1, 2};
  auto bytes = RangeEncode(s, t);
  bytes.push_back(0);
  EXPECT_THROW(RangeDecode(bytes, t, s.size()), DecodeError);
}

TEST(RangeCoder, SizeCloseToTableEstimate) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> loc(-2, 2), logscale(-2, 3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto t = BuildCdf(DensityFamily::kLogistic, {loc(rng), std::exp(logscale(rng))});
    const auto s = Draw(rng, t, 4096 + 1000 * static_cast<std::size_t>(trial));
    double bits = 0.0;
    for (auto v : s) bits += t.Bits(v);
    const double bytes = static_cast<double>(RangeEncode(s, t).size());
    EXPECT_LE(bytes, bits / 8.0 * 1.01 + 32.0);
  }
}

TEST(RangeCoder, LatentUsesPerChannelTables) {
  std::mt19937_64 rng(4);
  std::vector<CdfTable> tables = {BuildCdf(DensityFamily::kLogistic, {0.0, 0.5}),
                                  BuildCdf(DensityFamily::kLogistic, {5.0, 3.0})};
  QuantizedLatent l;
  l.channels = 2;
  l.height = 5;
  l.width = 6;
  for (const auto& t : tables) {
    const auto s = Draw(rng, t, 30);
    l.values.insert(l.values.end(), s.begin(), s.end());
  }
  const auto bytes = RangeEncode(l, tables);
  EXPECT_EQ(RangeDecode(bytes, tables, 5, 6), l);
}

}  // namespace
}  // namespace crdr
