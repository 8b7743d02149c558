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

#include "crdr/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <vector>

#include "crdr/error.hpp"

namespace crdr {
namespace {

using Color = std::array<double, 3>;

Color RandomColor(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 255.0);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

RgbImage SyntheticImage(std::mt19937_64& rng, std::int64_t height, std::int64_t width) {
  if (height < 1 || width < 1) throw DomainError("image size must be positive");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto h = static_cast<std::size_t>(height);
  const auto w = static_cast<std::size_t>(width);
  std::vector<double> canvas(h * w * 3);

  // Linear gradient between two colours.
  const Color a = RandomColor(rng), b = RandomColor(rng);
  const double angle = u(rng) * 2.0 * std::numbers::pi;
  const double gx = std::cos(angle), gy = std::sin(angle);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double t = 0.5 + 0.5 * (gx * (x / double(w) - 0.5) + gy * (y / double(h) - 0.5)) * 1.4;
      for (int c = 0; c < 3; ++c) {
        canvas[(y * w + x) * 3 + c] = a[c] + (b[c] - a[c]) * std::clamp(t, 0.0, 1.0);
      }
    }
  }

  const int shapes = 2 + static_cast<int>(u(rng) * 6);
  for (int s = 0; s < shapes; ++s) {
    const Color col = RandomColor(rng);
    const double cx = u(rng) * width, cy = u(rng) * height;
    const double rx = (0.08 + 0.3 * u(rng)) * width, ry = (0.08 + 0.3 * u(rng)) * height;
    const int kind = static_cast<int>(u(rng) * 3);
    const double freq = 0.15 + 0.6 * u(rng), phase = u(rng) * 6.28;
    const double alpha = 0.6 + 0.4 * u(rng);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        bool inside = false;
        double mod = 1.0;
        switch (kind) {
          case 0: inside = dx * dx + dy * dy <= 1.0; break;
          case 1: inside = std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0; break;
          default:
            inside = std::abs(dx) + std::abs(dy) <= 1.2;
            mod = 0.5 + 0.5 * std::sin(freq * (double(x) + 0.5 * double(y)) + phase);
            break;
        }
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) {
          double& px = canvas[(y * w + x) * 3 + c];
          px = (1.0 - alpha) * px + alpha * col[c] * mod;
        }
      }
    }
  }

  std::normal_distribution<double> grain(0.0, 2.0 + 6.0 * u(rng));
  RgbImage img;
  img.height = height;
  img.width = width;
  img.pixels.resize(canvas.size());
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(canvas[i] + grain(rng)), 0L, 255L));
  }
  return img;
}

void WriteSyntheticCorpus(const std::string& dir, int count, std::int64_t size,
                          std::uint64_t seed) {
  if (count < 1) throw DomainError("corpus size must be positive");
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05d.png", i);
    WritePng((std::filesystem::path(dir) / name).string(), SyntheticImage(rng, size, size));
  }
}

}  // namespace crdr
