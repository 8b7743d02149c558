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

#ifndef CRDR_RANGE_CODER_HPP_
#define CRDR_RANGE_CODER_HPP_

// Carry-less range coder (Subbotin style): 32-bit low/range, bytes emitted
// most significant first, frequencies with a fixed 2^16 total.

#include <cstdint>
#include <span>
#include <vector>

#include "crdr/entropy.hpp"

namespace crdr {

class RangeEncoder {
 public:
  // Codes the interval [cum, cum + freq) out of 2^16.
  void Encode(std::uint32_t cum, std::uint32_t freq);
  void EncodeSymbol(std::int32_t symbol, const CdfTable& table);

  // Flushes the state. Returns an empty buffer if nothing was encoded.
  std::vector<std::uint8_t> Finish();

 private:
  void Normalize();

  std::uint32_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  bool any_ = false;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  // Throws DecodeError if the buffer is shorter than the initial state.
  explicit RangeDecoder(std::span<const std::uint8_t> data);

  std::int32_t DecodeSymbol(const CdfTable& table);

  // Throws DecodeError if bytes remain unread.
  void ExpectEnd() const;

 private:
  std::uint32_t GetFrequency();
  void Consume(std::uint32_t cum, std::uint32_t freq);
  std::uint8_t NextByte();

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::uint32_t low_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

// Single-table streams.
std::vector<std::uint8_t> RangeEncode(std::span<const std::int32_t> symbols,
                                      const CdfTable& table);
std::vector<std::int32_t> RangeDecode(std::span<const std::uint8_t> payload,
                                      const CdfTable& table, std::size_t count);

// Latent streams: channel c is coded with tables[c], channel-major order.
std::vector<std::uint8_t> RangeEncode(const QuantizedLatent& latent,
                                      std::span<const CdfTable> tables);
QuantizedLatent RangeDecode(std::span<const std::uint8_t> payload,
                            std::span<const CdfTable> tables,
                            std::int64_t height, std::int64_t width);

}  // namespace crdr

#endif  // CRDR_RANGE_CODER_HPP_
