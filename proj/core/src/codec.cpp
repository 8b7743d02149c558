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

#include "crdr/codec.hpp"

#include <algorithm>
#include <string>

#include "crdr/entropy.hpp"
#include "crdr/error.hpp"
#include "crdr/range_coder.hpp"

namespace crdr {
namespace {

void Put16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 8);
  p[1] = static_cast<std::uint8_t>(v);
}

void Put32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (24 - 8 * i));
}

std::uint16_t Get16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t Get32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | p[i];
  return v;
}

std::int64_t RoundUp(std::int64_t v, std::int64_t m) { return (v + m - 1) / m * m; }

torch::Tensor MirrorIndex(std::int64_t n, std::int64_t target) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(target));
  const std::int64_t period = 2 * (n - 1);
  for (std::int64_t i = 0; i < target; ++i) {
    if (n == 1) {
      idx[static_cast<std::size_t>(i)] = 0;
      continue;
    }
    const std::int64_t r = i % period;
    idx[static_cast<std::size_t>(i)] = r < n ? r : period - r;
  }
  return torch::tensor(idx, torch::kLong);
}

std::vector<CdfTable> TablesFor(NicModel& model, const QualityControl& qc) {
  return BuildCdfTables(model->entropy()->EntropyParamsAt(qc.value()));
}

}  // namespace

std::array<std::uint8_t, kHeaderBytes> SerializeHeader(const StreamHeader& h) {
  std::array<std::uint8_t, kHeaderBytes> out{};
  std::copy(kStreamMagic.begin(), kStreamMagic.end(), out.begin());
  out[4] = kStreamVersion;
  Put16(&out[5], h.height);
  Put16(&out[7], h.width);
  out[9] = h.level;
  out[10] = h.fraction;
  Put16(&out[11], h.channels);
  Put32(&out[13], h.payload_bytes);
  return out;
}

StreamHeader ParseHeader(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("stream shorter than its header");
  if (!std::equal(kStreamMagic.begin(), kStreamMagic.end(), bytes.begin())) {
    throw FormatError("not a crdr stream (bad magic)");
  }
  if (bytes[4] != kStreamVersion) {
    throw FormatError("unsupported stream version " + std::to_string(bytes[4]));
  }
  StreamHeader h;
  h.height = Get16(&bytes[5]);
  h.width = Get16(&bytes[7]);
  h.level = bytes[9];
  h.fraction = bytes[10];
  h.channels = Get16(&bytes[11]);
  h.payload_bytes = Get32(&bytes[13]);
  if (h.height == 0 || h.width == 0) throw FormatError("stream has zero image size");
  return h;
}

std::vector<std::uint8_t> Bitstream::Serialize() const {
  StreamHeader h = header;
  h.payload_bytes = static_cast<std::uint32_t>(payload.size());
  const auto head = SerializeHeader(h);
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Bitstream Bitstream::Parse(std::span<const std::uint8_t> bytes) {
  Bitstream b;
  b.header = ParseHeader(bytes);
  const std::size_t declared = b.header.payload_bytes;
  const std::size_t available = bytes.size() - kHeaderBytes;
  if (available < declared) throw DecodeError("stream payload truncated");
  if (available > declared) throw DecodeError("stream has trailing bytes");
  b.payload.assign(bytes.begin() + kHeaderBytes, bytes.end());
  return b;
}

torch::Tensor PadToMultiple(const torch::Tensor& x, std::int64_t m) {
  if (x.dim() != 4) throw DimensionError("expected a (N, C, H, W) tensor");
  if (m < 1) throw DomainError("pad multiple must be positive");
  const std::int64_t h = x.size(2);
  const std::int64_t w = x.size(3);
  if (h < 1 || w < 1) throw DimensionError("image must be non-empty");
  const std::int64_t ph = RoundUp(h, m);
  const std::int64_t pw = RoundUp(w, m);
  if (ph == h && pw == w) return x;
  return x.index_select(2, MirrorIndex(h, ph)).index_select(3, MirrorIndex(w, pw));
}

torch::Tensor CropTo(const torch::Tensor& x, std::int64_t height, std::int64_t width) {
  if (x.dim() != 4 || x.size(2) < height || x.size(3) < width) {
    throw DimensionError("crop larger than the image");
  }
  return x.slice(2, 0, height).slice(3, 0, width);
}

QualityControl StreamQuality(const StreamHeader& h, int num_levels) {
  try {
    return QualityControl::FromHeader(h.level, h.fraction, num_levels);
  } catch (const DomainError& e) {
    throw FormatError(std::string("stream quality invalid for this model: ") + e.what());
  }
}

Bitstream Compress(const torch::Tensor& x, const QualityControl& qc, NicModel& model) {
  if (x.dim() != 4 || x.size(0) != 1 || x.size(1) != 3) {
    throw DimensionError("compress expects a (1, 3, H, W) image");
  }
  const std::int64_t h = x.size(2);
  const std::int64_t w = x.size(3);
  if (h < 1 || w < 1 || h > kMaxImageSide || w > kMaxImageSide) {
    throw SizeError("image sides must be within 1..65535, got " + std::to_string(h) +
                    "x" + std::to_string(w));
  }
  const ModelConfig& cfg = model->config();
  if (qc.num_levels() != cfg.num_levels) {
    throw CompatibilityError("quality control has " + std::to_string(qc.num_levels()) +
                             " levels, model has " + std::to_string(cfg.num_levels));
  }
  const QualityControl snapped = qc.Quantized();
  torch::NoGradGuard no_grad;
  model->eval();
  const auto padded = PadToMultiple(x.to(torch::kFloat), kPadMultiple);
  const auto y = model->Encode(padded, snapped);
  const auto y_hat = Quantize(y, QuantizeMode::kInfer);
  const std::vector<CdfTable> tables = TablesFor(model, snapped);
  QuantizedLatent latent = ToQuantizedLatent(y_hat);
  // Symbols outside the table support are clamped to its edge.
  for (std::int64_t c = 0; c < latent.channels; ++c) {
    const SymbolBounds& b = tables[static_cast<std::size_t>(c)].bounds;
    auto first = latent.values.begin() + c * latent.plane_size();
    std::for_each(first, first + latent.plane_size(),
                  [&](std::int32_t& v) { v = std::clamp(v, b.min, b.max); });
  }

  Bitstream stream;
  stream.header.height = static_cast<std::uint16_t>(h);
  stream.header.width = static_cast<std::uint16_t>(w);
  stream.header.level = static_cast<std::uint8_t>(snapped.level());
  stream.header.fraction = snapped.fraction_byte();
  stream.header.channels = static_cast<std::uint16_t>(cfg.latent_channels);
  stream.payload = RangeEncode(latent, tables);
  stream.header.payload_bytes = static_cast<std::uint32_t>(stream.payload.size());
  return stream;
}

torch::Tensor Decompress(const Bitstream& stream, const RealismWeight& beta,
                         NicModel& model) {
  const ModelConfig& cfg = model->config();
  const StreamHeader& h = stream.header;
  if (h.channels != cfg.latent_channels) {
    throw CompatibilityError("stream has " + std::to_string(h.channels) +
                             " latent channels, model expects " +
                             std::to_string(cfg.latent_channels));
  }
  if (h.height == 0 || h.width == 0) throw FormatError("stream has zero image size");
  const QualityControl qc = StreamQuality(h, cfg.num_levels);
  const RealismWeight w(beta.beta(), cfg.beta_max);

  const std::vector<CdfTable> tables = TablesFor(model, qc);
  const std::int64_t lh = RoundUp(h.height, kPadMultiple) / kLatentStride;
  const std::int64_t lw = RoundUp(h.width, kPadMultiple) / kLatentStride;
  const QuantizedLatent latent = RangeDecode(stream.payload, tables, lh, lw);

  torch::NoGradGuard no_grad;
  model->eval();
  const auto x_hat = model->Generate(FromQuantizedLatent(latent), qc, w);
  return CropTo(x_hat, h.height, h.width).contiguous();
}

}  // namespace crdr
