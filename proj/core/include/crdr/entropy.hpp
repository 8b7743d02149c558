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

#ifndef CRDR_ENTROPY_HPP_
#define CRDR_ENTROPY_HPP_

// Factorized entropy model over integer latents: continuous per-channel
// densities integrated over unit bins, and their 16-bit quantized CDF tables.

#include <cstdint>
#include <span>
#include <vector>

namespace crdr {

// Integer latent in channel-major (C, H, W) order.
struct QuantizedLatent {
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::int32_t> values;

  std::int64_t plane_size() const { return height * width; }
  std::span<const std::int32_t> channel(std::int64_t c) const {
    return std::span<const std::int32_t>(values).subspan(
        static_cast<std::size_t>(c * plane_size()),
        static_cast<std::size_t>(plane_size()));
  }
  bool operator==(const QuantizedLatent&) const = default;
};

enum class DensityFamily { kLogistic, kNormal, kUniform };

// Location/scale of one channel. For kUniform the support is
// [location - scale, location + scale].
struct ChannelDensity {
  double location = 0.0;
  double scale = 1.0;
};

struct EntropyParams {
  DensityFamily family = DensityFamily::kLogistic;
  std::vector<ChannelDensity> channels;
};

inline constexpr double kProbabilityFloor = 1e-9;
inline constexpr int kCdfPrecisionBits = 16;
inline constexpr std::uint32_t kCdfTotal = 1u << kCdfPrecisionBits;
// Symbols outside location +- kTailScales * scale carry negligible mass.
inline constexpr double kLogisticTailScales = 12.0;
inline constexpr double kNormalTailScales = 6.0;
inline constexpr std::int32_t kMaxHalfRange = 2048;

struct SymbolBounds {
  std::int32_t min = 0;
  std::int32_t max = 0;
  std::int32_t size() const { return max - min + 1; }
  bool contains(std::int32_t s) const { return s >= min && s <= max; }
};

double DensityCdf(DensityFamily family, const ChannelDensity& d, double x);

// P(symbol) = CDF(s + 0.5) - CDF(s - 0.5), floored at kProbabilityFloor.
// Throws ParameterError on a nonpositive or non-finite scale.
double SymbolProbability(DensityFamily family, const ChannelDensity& d,
                         std::int32_t symbol);

SymbolBounds BoundsFor(DensityFamily family, const ChannelDensity& d);

// Per-element probabilities in the latent's storage order. Throws
// DomainError for symbols outside BoundsFor().
std::vector<double> Likelihood(const QuantizedLatent& latent,
                               const EntropyParams& params);

struct RateEstimate {
  double bits = 0.0;
  double bpp = 0.0;
};

// bits = -sum log2 p over the continuous model; bpp = bits / (H * W) of the
// original image.
RateEstimate EstimateRate(const QuantizedLatent& latent,
                          const EntropyParams& params, std::int64_t image_height,
                          std::int64_t image_width);

RateEstimate EstimateRate(std::span<const double> probabilities,
                          std::int64_t image_height, std::int64_t image_width);

// Cumulative frequency table for one channel. cdf[i] is the total frequency
// of symbols below bounds.min + i; cdf.front() == 0, cdf.back() == 2^16.
struct CdfTable {
  SymbolBounds bounds;
  std::vector<std::uint32_t> cdf;

  std::uint32_t frequency(std::int32_t symbol) const {
    const auto i = static_cast<std::size_t>(symbol - bounds.min);
    return cdf[i + 1] - cdf[i];
  }
  std::uint32_t cumulative(std::int32_t symbol) const {
    return cdf[static_cast<std::size_t>(symbol - bounds.min)];
  }
  // Symbol whose interval contains target (target < 2^16).
  std::int32_t Lookup(std::uint32_t target) const;
  // -log2(frequency / 2^16).
  double Bits(std::int32_t symbol) const;

  // True when the table satisfies every structural invariant.
  bool IsValid() const;
};

// Quantizes the bin masses inside the bounds to integer frequencies summing
// to 2^16. Every symbol gets at least 1; the remaining mass is split
// proportionally and the rounding residue goes to the largest remainders
// (ties to the lower symbol).
CdfTable BuildCdf(DensityFamily family, const ChannelDensity& d);
CdfTable BuildCdf(DensityFamily family, const ChannelDensity& d,
                  SymbolBounds bounds);
std::vector<CdfTable> BuildCdfTables(const EntropyParams& params);

// Rate measured with the quantized tables the coder uses.
RateEstimate EstimateRate(const QuantizedLatent& latent,
                          std::span<const CdfTable> tables,
                          std::int64_t image_height, std::int64_t image_width);

}  // namespace crdr

#endif  // CRDR_ENTROPY_HPP_
