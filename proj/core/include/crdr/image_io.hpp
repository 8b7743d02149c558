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

#ifndef CRDR_IMAGE_IO_HPP_
#define CRDR_IMAGE_IO_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

namespace crdr {

// 8-bit interleaved RGB image.
struct RgbImage {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3
};

// Reads any 8/16-bit PNG, converting to 8-bit RGB. Throws FormatError.
RgbImage ReadPng(const std::string& path);
void WritePng(const std::string& path, const RgbImage& image);

// (1, 3, H, W) float tensor in [0, 1].
torch::Tensor ToTensor(const RgbImage& image);
// Rounds the first batch element of a [0, 1] tensor to 8 bits.
RgbImage FromTensor(const torch::Tensor& image);

// Sorted list of *.png files directly inside dir. Throws FormatError if dir
// does not exist.
std::vector<std::string> ListPngs(const std::string& dir);

}  // namespace crdr

#endif  // CRDR_IMAGE_IO_HPP_
