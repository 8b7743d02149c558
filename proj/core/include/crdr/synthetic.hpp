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

#ifndef CRDR_SYNTHETIC_HPP_
#define CRDR_SYNTHETIC_HPP_

// Procedural images (gradients, shapes, stripes, grain) for desk-scale
// training and tests when no photo corpus is available.

#include <cstdint>
#include <random>
#include <string>

#include "crdr/image_io.hpp"

namespace crdr {

RgbImage SyntheticImage(std::mt19937_64& rng, std::int64_t height, std::int64_t width);

// Writes img_00000.png ... into dir (created if missing).
void WriteSyntheticCorpus(const std::string& dir, int count, std::int64_t size,
                          std::uint64_t seed);

}  // namespace crdr

#endif  // CRDR_SYNTHETIC_HPP_
