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

#include "crdr/quality.hpp"

#include <cmath>
#include <string>

#include "crdr/error.hpp"

namespace crdr {

QualityControl::QualityControl(int level, double fraction, int num_levels)
    : level_(level), fraction_(fraction), num_levels_(num_levels) {
  if (num_levels < 1) {
    throw DomainError("number of quality levels must be >= 1");
  }
  if (level < 0 || level >= num_levels) {
    throw DomainError("quality level " + std::to_string(level) +
                      " outside [0, " + std::to_string(num_levels - 1) + "]");
  }
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw DomainError("quality fraction must lie in [0, 1)");
  }
  if (level == num_levels - 1 && fraction != 0.0) {
    throw DomainError("quality fraction must be 0 at the top level");
  }
}

QualityControl QualityControl::FromFloat(double q, int num_levels) {
  if (!std::isfinite(q) || q < 0.0 || q > num_levels - 1) {
    throw DomainError("quality " + std::to_string(q) + " outside [0, " +
                      std::to_string(num_levels - 1) + "]");
  }
  const int level = static_cast<int>(std::floor(q));
  return QualityControl(level, q - level, num_levels);
}

QualityControl QualityControl::FromHeader(int level, std::uint8_t fraction_num,
                                          int num_levels) {
  return QualityControl(level, fraction_num / 256.0, num_levels);
}

std::uint8_t QualityControl::fraction_byte() const {
  const long n = std::lround(fraction_ * 256.0);
  return static_cast<std::uint8_t>(n > 255 ? 255 : n);
}

QualityControl QualityControl::Quantized() const {
  return FromHeader(level_, fraction_byte(), num_levels_);
}

RealismWeight::RealismWeight(double beta, double beta_max)
    : beta_(beta), beta_max_(beta_max) {
  if (!std::isfinite(beta_max) || beta_max < 0.0) {
    throw DomainError("beta_max must be finite and nonnegative");
  }
  if (!std::isfinite(beta) || beta < 0.0 || beta > beta_max) {
    throw DomainError("realism weight " + std::to_string(beta) +
                      " outside [0, " + std::to_string(beta_max) + "]");
  }
}

double RealismWeight::normalized() const {
  return beta_max_ > 0.0 ? beta_ / beta_max_ : 0.0;
}

}  // namespace crdr
