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

#include "crdr/range_coder.hpp"

#include <algorithm>
#include <string>

#include "crdr/error.hpp"

namespace crdr {
namespace {

constexpr std::uint32_t kTop = 1u << 24;
constexpr std::uint32_t kBottom = 1u << 16;
constexpr int kStateBytes = 4;

}  // namespace

void RangeEncoder::Encode(std::uint32_t cum, std::uint32_t freq) {
  any_ = true;
  const std::uint32_t r = range_ >> kCdfPrecisionBits;
  low_ += cum * r;
  range_ = freq * r;
  Normalize();
}

void RangeEncoder::Normalize() {
  for (;;) {
    if ((low_ ^ (low_ + range_)) >= kTop) {
      if (range_ >= kBottom) break;
      // Squeeze the range below the next byte boundary so no carry can occur.
      range_ = (0u - low_) & (kBottom - 1);
    }
    out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
    low_ <<= 8;
    range_ <<= 8;
  }
}

void RangeEncoder::EncodeSymbol(std::int32_t symbol, const CdfTable& table) {
  if (!table.bounds.contains(symbol)) {
    throw EncodeError("symbol " + std::to_string(symbol) + " outside [" +
                      std::to_string(table.bounds.min) + ", " +
                      std::to_string(table.bounds.max) + "]");
  }
  Encode(table.cumulative(symbol), table.frequency(symbol));
}

std::vector<std::uint8_t> RangeEncoder::Finish() {
  if (any_) {
    for (int i = 0; i < kStateBytes; ++i) {
      out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
      low_ <<= 8;
    }
  }
  std::vector<std::uint8_t> out = std::move(out_);
  *this = RangeEncoder();
  return out;
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> data) : data_(data) {
  if (data_.empty()) return;
  for (int i = 0; i < kStateBytes; ++i) code_ = (code_ << 8) | NextByte();
}

std::uint8_t RangeDecoder::NextByte() {
  if (pos_ >= data_.size()) throw DecodeError("range-coder payload truncated");
  return data_[pos_++];
}

std::uint32_t RangeDecoder::GetFrequency() {
  if (data_.empty()) throw DecodeError("range-coder payload truncated");
  range_ >>= kCdfPrecisionBits;
  const std::uint32_t value = (code_ - low_) / range_;
  if (value >= kCdfTotal) throw DecodeError("range-coder state is corrupt");
  return value;
}

void RangeDecoder::Consume(std::uint32_t cum, std::uint32_t freq) {
  low_ += cum * range_;
  range_ *= freq;
  for (;;) {
    if ((low_ ^ (low_ + range_)) >= kTop) {
      if (range_ >= kBottom) break;
      range_ = (0u - low_) & (kBottom - 1);
    }
    code_ = (code_ << 8) | NextByte();
    low_ <<= 8;
    range_ <<= 8;
  }
}

std::int32_t RangeDecoder::DecodeSymbol(const CdfTable& table) {
  const std::uint32_t target = GetFrequency();
  const std::int32_t symbol = table.Lookup(target);
  Consume(table.cumulative(symbol), table.frequency(symbol));
  return symbol;
}

void RangeDecoder::ExpectEnd() const {
  if (pos_ != data_.size()) {
    throw DecodeError("range-coder payload has " +
                      std::to_string(data_.size() - pos_) + " trailing bytes");
  }
}

std::vector<std::uint8_t> RangeEncode(std::span<const std::int32_t> symbols,
                                      const CdfTable& table) {
  RangeEncoder enc;
  for (const std::int32_t s : symbols) enc.EncodeSymbol(s, table);
  return enc.Finish();
}

std::vector<std::int32_t> RangeDecode(std::span<const std::uint8_t> payload,
                                      const CdfTable& table, std::size_t count) {
  RangeDecoder dec(payload);
  std::vector<std::int32_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(dec.DecodeSymbol(table));
  dec.ExpectEnd();
  return out;
}

std::vector<std::uint8_t> RangeEncode(const QuantizedLatent& latent,
                                      std::span<const CdfTable> tables) {
  if (static_cast<std::int64_t>(tables.size()) != latent.channels) {
    throw DimensionError("table count does not match latent channels");
  }
  RangeEncoder enc;
  for (std::int64_t c = 0; c < latent.channels; ++c) {
    for (const std::int32_t s : latent.channel(c)) {
      enc.EncodeSymbol(s, tables[static_cast<std::size_t>(c)]);
    }
  }
  return enc.Finish();
}

QuantizedLatent RangeDecode(std::span<const std::uint8_t> payload,
                            std::span<const CdfTable> tables,
                            std::int64_t height, std::int64_t width) {
  QuantizedLatent latent;
  latent.channels = static_cast<std::int64_t>(tables.size());
  latent.height = height;
  latent.width = width;
  // Corrupt headers can claim huge planes; grow on demand past 1M symbols.
  latent.values.reserve(static_cast<std::size_t>(
      std::min<std::int64_t>(latent.channels * height * width, 1 << 20)));
  RangeDecoder dec(payload);
  for (std::int64_t c = 0; c < latent.channels; ++c) {
    const CdfTable& t = tables[static_cast<std::size_t>(c)];
    for (std::int64_t i = 0; i < height * width; ++i) {
      latent.values.push_back(dec.DecodeSymbol(t));
    }
  }
  dec.ExpectEnd();
  return latent;
}

}  // namespace crdr
