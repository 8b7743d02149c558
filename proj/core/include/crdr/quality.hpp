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

#ifndef CRDR_QUALITY_HPP_
#define CRDR_QUALITY_HPP_

#include <cstdint>

namespace crdr {

// Rate control input: integer level plus a fraction used to blend the
// scaling vectors of neighbouring levels.
class QualityControl {
 public:
  // Throws DomainError unless 0 <= level < num_levels, 0 <= fraction < 1 and
  // fraction == 0 at the top level.
  QualityControl(int level, double fraction, int num_levels);

  // Splits a continuous dial value into level + fraction.
  static QualityControl FromFloat(double q, int num_levels);

  // Rebuilds the control from the one-byte fraction stored in a bitstream
  // (numerator over 256).
  static QualityControl FromHeader(int level, std::uint8_t fraction_num,
                                   int num_levels);

  int level() const { return level_; }
  double fraction() const { return fraction_; }
  int num_levels() const { return num_levels_; }
  double value() const { return level_ + fraction_; }

  // Fraction rounded to the 1/256 grid of the header byte.
  std::uint8_t fraction_byte() const;

  // Same control snapped to what survives a bitstream round trip.
  QualityControl Quantized() const;

  bool operator==(const QualityControl&) const = default;

 private:
  int level_ = 0;
  double fraction_ = 0.0;
  int num_levels_ = 1;
};

inline constexpr double kDefaultBetaMax = 5.12;

// Decode-time realism input beta in [0, beta_max].
class RealismWeight {
 public:
  explicit RealismWeight(double beta, double beta_max = kDefaultBetaMax);

  double beta() const { return beta_; }
  double beta_max() const { return beta_max_; }
  // beta / beta_max, or 0 when beta_max == 0.
  double normalized() const;

 private:
  double beta_;
  double beta_max_;
};

}  // namespace crdr

#endif  // CRDR_QUALITY_HPP_
