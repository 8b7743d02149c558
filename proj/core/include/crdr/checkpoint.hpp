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

#ifndef CRDR_CHECKPOINT_HPP_
#define CRDR_CHECKPOINT_HPP_

// Versioned binary container of named tensors.
//
// Layout (little-endian):
//   "CRDRCKPT"  u32 version  u64 config digest
//   u32 n + config text      (key = value lines, covered by the digest)
//   u32 n + state text       (resume state, not digested)
//   u32 array count, then per array:
//     u32 n + name  u8 dtype (0 f32, 1 f64, 2 i64)  u8 rank  i64 dims[rank]
//     raw element bytes

#include <torch/torch.h>

#include <cstdint>
#include <map>
#include <string>

#include "crdr/config.hpp"

namespace crdr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorArchive {
  KeyValueConfig config;
  KeyValueConfig state;
  std::map<std::string, torch::Tensor> arrays;

  std::uint64_t digest() const { return Fnv1a64(config.ToText()); }

  void Save(const std::string& path) const;
  std::string Serialize() const;
  // Throws FormatError on bad magic, version, digest or truncation.
  static TensorArchive Load(const std::string& path);
  static TensorArchive Deserialize(const std::string& bytes);
};

// Copies every parameter and buffer of module under prefix + name.
void StoreParameters(const torch::nn::Module& module, TensorArchive& archive,
                     const std::string& prefix);
// Throws FormatError if an array is missing and CompatibilityError on a
// shape mismatch.
void LoadParameters(torch::nn::Module& module, const TensorArchive& archive,
                    const std::string& prefix);

}  // namespace crdr

#endif  // CRDR_CHECKPOINT_HPP_
