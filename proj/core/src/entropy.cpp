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

#include "crdr/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "crdr/error.hpp"

namespace crdr {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void CheckScale(const ChannelDensity& d) {
  if (!(d.scale > 0.0) || !std::isfinite(d.scale) ||
      !std::isfinite(d.location)) {
    throw ParameterError("entropy model scale must be positive and finite");
  }
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Mass of [lo, hi] for the standardized density, evaluated on the tail that
// keeps the subtraction well conditioned.
double StandardMass(DensityFamily family, double lo, double hi) {
  const bool upper = lo + hi > 0.0;
  switch (family) {
    case DensityFamily::kLogistic:
      return upper ? Sigmoid(-lo) - Sigmoid(-hi) : Sigmoid(hi) - Sigmoid(lo);
    case DensityFamily::kNormal:
      return upper ? 0.5 * (std::erfc(lo * kInvSqrt2) - std::erfc(hi * kInvSqrt2))
                   : 0.5 * (std::erfc(-hi * kInvSqrt2) -
                            std::erfc(-lo * kInvSqrt2));
    case DensityFamily::kUniform: {
      const double a = std::clamp(lo, -1.0, 1.0);
      const double b = std::clamp(hi, -1.0, 1.0);
      return (b - a) / 2.0;
    }
  }
  return 0.0;
}

double BinMass(DensityFamily family, const ChannelDensity& d,
               std::int32_t symbol) {
  const double lo = (symbol - 0.5 - d.location) / d.scale;
  const double hi = (symbol + 0.5 - d.location) / d.scale;
  return std::max(0.0, StandardMass(family, lo, hi));
}

// Neumaier-compensated sum, order independent enough for reporting.
class CompensatedSum {
 public:
  void Add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

RateEstimate MakeRate(double bits, std::int64_t h, std::int64_t w) {
  if (h < 1 || w < 1) throw DimensionError("image dimensions must be >= 1");
  return RateEstimate{bits, bits / static_cast<double>(h * w)};
}

}  // namespace

double DensityCdf(DensityFamily family, const ChannelDensity& d, double x) {
  CheckScale(d);
  const double z = (x - d.location) / d.scale;
  switch (family) {
    case DensityFamily::kLogistic:
      return Sigmoid(z);
    case DensityFamily::kNormal:
      return 0.5 * std::erfc(-z * kInvSqrt2);
    case DensityFamily::kUniform:
      return std::clamp((z + 1.0) / 2.0, 0.0, 1.0);
  }
  return 0.0;
}

double SymbolProbability(DensityFamily family, const ChannelDensity& d,
                         std::int32_t symbol) {
  CheckScale(d);
  return std::max(kProbabilityFloor, BinMass(family, d, symbol));
}

SymbolBounds BoundsFor(DensityFamily family, const ChannelDensity& d) {
  CheckScale(d);
  double half = d.scale;
  if (family == DensityFamily::kLogistic) half *= kLogisticTailScales;
  if (family == DensityFamily::kNormal) half *= kNormalTailScales;
  const double center = std::round(d.location);
  const double cap = static_cast<double>(kMaxHalfRange);
  const double lo = std::clamp(std::floor(d.location - half + 0.5), center - cap,
                               center);
  const double hi = std::clamp(std::ceil(d.location + half - 0.5), center,
                               center + cap);
  return SymbolBounds{static_cast<std::int32_t>(lo),
                      static_cast<std::int32_t>(hi)};
}

std::vector<double> Likelihood(const QuantizedLatent& latent,
                               const EntropyParams& params) {
  if (static_cast<std::int64_t>(params.channels.size()) != latent.channels) {
    throw DimensionError("entropy model has " +
                         std::to_string(params.channels.size()) +
                         " channels, latent has " +
                         std::to_string(latent.channels));
  }
  std::vector<double> probs;
  probs.reserve(latent.values.size());
  for (std::int64_t c = 0; c < latent.channels; ++c) {
    const ChannelDensity& d = params.channels[static_cast<std::size_t>(c)];
    const SymbolBounds bounds = BoundsFor(params.family, d);
    for (const std::int32_t s : latent.channel(c)) {
      if (!bounds.contains(s)) {
        throw DomainError("symbol " + std::to_string(s) + " outside [" +
                          std::to_string(bounds.min) + ", " +
                          std::to_string(bounds.max) + "]");
      }
      probs.push_back(SymbolProbability(params.family, d, s));
    }
  }
  return probs;
}

RateEstimate EstimateRate(std::span<const double> probabilities,
                          std::int64_t image_height, std::int64_t image_width) {
  CompensatedSum bits;
  for (const double p : probabilities) bits.Add(-std::log2(p));
  return MakeRate(bits.value(), image_height, image_width);
}

RateEstimate EstimateRate(const QuantizedLatent& latent,
                          const EntropyParams& params, std::int64_t image_height,
                          std::int64_t image_width) {
  const std::vector<double> probs = Likelihood(latent, params);
  return EstimateRate(probs, image_height, image_width);
}

std::int32_t CdfTable::Lookup(std::uint32_t target) const {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  return bounds.min + static_cast<std::int32_t>(it - cdf.begin()) - 1;
}

double CdfTable::Bits(std::int32_t symbol) const {
  return kCdfPrecisionBits - std::log2(static_cast<double>(frequency(symbol)));
}

bool CdfTable::IsValid() const {
  if (bounds.max < bounds.min) return false;
  if (cdf.size() != static_cast<std::size_t>(bounds.size()) + 1) return false;
  if (cdf.front() != 0 || cdf.back() != kCdfTotal) return false;
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    if (cdf[i] <= cdf[i - 1]) return false;
  }
  return true;
}

CdfTable BuildCdf(DensityFamily family, const ChannelDensity& d) {
  return BuildCdf(family, d, BoundsFor(family, d));
}

CdfTable BuildCdf(DensityFamily family, const ChannelDensity& d,
                  SymbolBounds bounds) {
  CheckScale(d);
  const std::int64_t n = bounds.size();
  if (n < 1 || n > static_cast<std::int64_t>(kCdfTotal)) {
    throw ParameterError("symbol range of " + std::to_string(n) +
                         " does not fit a 16-bit table");
  }
  std::vector<double> mass(static_cast<std::size_t>(n));
  double total_mass = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    mass[i] = BinMass(family, d, bounds.min + static_cast<std::int32_t>(i));
    total_mass += mass[i];
  }
  if (!(total_mass > 0.0)) {
    std::fill(mass.begin(), mass.end(), 1.0);
    total_mass = static_cast<double>(n);
  }

  const double spare = static_cast<double>(kCdfTotal - n);
  std::vector<std::uint32_t> freq(static_cast<std::size_t>(n));
  std::vector<double> remainder(static_cast<std::size_t>(n));
  std::int64_t assigned = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double ideal = spare * mass[i] / total_mass;
    const double whole = std::floor(ideal);
    freq[i] = 1 + static_cast<std::uint32_t>(whole);
    remainder[i] = ideal - whole;
    assigned += freq[i];
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  std::int64_t residue = static_cast<std::int64_t>(kCdfTotal) - assigned;
  for (std::size_t k = 0; residue > 0; k = (k + 1) % order.size(), --residue) {
    ++freq[order[k]];
  }
  // Rounding overshoot: take from the largest entries that can spare it.
  while (residue < 0) {
    const auto it = std::max_element(freq.begin(), freq.end());
    --*it;
    ++residue;
  }

  CdfTable table;
  table.bounds = bounds;
  table.cdf.resize(static_cast<std::size_t>(n) + 1);
  table.cdf[0] = 0;
  for (std::int64_t i = 0; i < n; ++i) table.cdf[i + 1] = table.cdf[i] + freq[i];
  return table;
}

std::vector<CdfTable> BuildCdfTables(const EntropyParams& params) {
  std::vector<CdfTable> tables;
  tables.reserve(params.channels.size());
  for (const ChannelDensity& d : params.channels) {
    tables.push_back(BuildCdf(params.family, d));
  }
  return tables;
}

RateEstimate EstimateRate(const QuantizedLatent& latent,
                          std::span<const CdfTable> tables,
                          std::int64_t image_height, std::int64_t image_width) {
  if (static_cast<std::int64_t>(tables.size()) != latent.channels) {
    throw DimensionError("table count does not match latent channels");
  }
  CompensatedSum bits;
  for (std::int64_t c = 0; c < latent.channels; ++c) {
    const CdfTable& t = tables[static_cast<std::size_t>(c)];
    for (const std::int32_t s : latent.channel(c)) {
      if (!t.bounds.contains(s)) {
        throw DomainError("symbol " + std::to_string(s) + " outside table");
      }
      bits.Add(t.Bits(s));
    }
  }
  return MakeRate(bits.value(), image_height, image_width);
}

}  // namespace crdr
