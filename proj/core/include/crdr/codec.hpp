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

#ifndef CRDR_CODEC_HPP_
#define CRDR_CODEC_HPP_

// The .crdr container and the compress/decompress pair.

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "crdr/model.hpp"
#include "crdr/quality.hpp"

namespace crdr {

inline constexpr std::array<std::uint8_t, 4> kStreamMagic = {'C', 'R', 'D', 'R'};
inline constexpr std::uint8_t kStreamVersion = 1;
inline constexpr std::size_t kHeaderBytes = 17;
inline constexpr std::int64_t kMaxImageSide = 65535;

// Multi-byte fields are big-endian on disk.
struct StreamHeader {
  std::uint16_t height = 0;
  std::uint16_t width = 0;
  std::uint8_t level = 0;
  std::uint8_t fraction = 0;  // numerator over 256
  std::uint16_t channels = 0;
  std::uint32_t payload_bytes = 0;

  bool operator==(const StreamHeader&) const = default;
};

std::array<std::uint8_t, kHeaderBytes> SerializeHeader(const StreamHeader& h);
// Throws FormatError on short input, bad magic or unknown version.
StreamHeader ParseHeader(std::span<const std::uint8_t> bytes);

struct Bitstream {
  StreamHeader header;
  std::vector<std::uint8_t> payload;

  std::vector<std::uint8_t> Serialize() const;
  // Throws FormatError for header problems and DecodeError when the payload
  // is shorter or longer than declared.
  static Bitstream Parse(std::span<const std::uint8_t> bytes);
  std::size_t size() const { return kHeaderBytes + payload.size(); }
};

// Mirror padding (edge not repeated) of a (N, C, H, W) tensor on the bottom
// and right up to the next multiple of m. Works for any H, W >= 1.
torch::Tensor PadToMultiple(const torch::Tensor& x, std::int64_t m = kPadMultiple);
torch::Tensor CropTo(const torch::Tensor& x, std::int64_t height, std::int64_t width);

// x is (1, 3, H, W) in [0, 1]. The fraction is snapped to 1/256 before
// encoding. Throws SizeError unless 1 <= H, W <= 65535 and
// CompatibilityError when qc does not match the model's level count.
Bitstream Compress(const torch::Tensor& x, const QualityControl& qc, NicModel& model);

// Returns (1, 3, H, W). Throws CompatibilityError on a channel mismatch and
// DecodeError on a damaged payload.
torch::Tensor Decompress(const Bitstream& stream, const RealismWeight& beta,
                         NicModel& model);

// Control recorded in a stream for a model with num_levels levels.
QualityControl StreamQuality(const StreamHeader& h, int num_levels);

}  // namespace crdr

#endif  // CRDR_CODEC_HPP_
