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

#ifndef CRDR_DISCRIMINATOR_HPP_
#define CRDR_DISCRIMINATOR_HPP_

// Quality-aware patch discriminators. Every design maps an (N, 3, H, W)
// image to an (N, 1, H/16, W/16) logit map through four stride-2 conv
// blocks and a final 1x1 projection. Layers shared across levels receive the
// one-hot quality condition concatenated to their input.

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace crdr {

enum class DesignKind {
  kIndependent,
  kShared,
  kHybridHead,
  kHybridBackbone,
  kSharedNoCond,
};

inline constexpr std::array<DesignKind, 5> kAllDesigns = {
    DesignKind::kIndependent, DesignKind::kShared, DesignKind::kHybridHead,
    DesignKind::kHybridBackbone, DesignKind::kSharedNoCond};

std::string ToString(DesignKind kind);
// Throws DomainError for unknown names.
DesignKind ParseDesignKind(const std::string& name);

// One-hot map of shape (1, Q, h, w): channel q is all ones.
torch::Tensor MakeCondition(int q, std::int64_t height, std::int64_t width,
                            int num_levels,
                            const torch::TensorOptions& options = {});

struct DiscriminatorConfig {
  DesignKind kind = DesignKind::kIndependent;
  int num_levels = 5;
  std::array<int, 4> widths = {64, 128, 256, 256};
};

struct ParamReport {
  std::int64_t shared = 0;
  std::vector<std::int64_t> per_level;
  std::int64_t total = 0;
};

class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const DiscriminatorConfig& cfg);

  // Throws DimensionError unless H, W are positive multiples of 16 and
  // DomainError unless 0 <= q < Q.
  torch::Tensor forward(const torch::Tensor& image, int q);

  const DiscriminatorConfig& config() const { return cfg_; }

  // Parameters used only when scoring level q.
  std::vector<torch::Tensor> LevelParameters(int q) const;
  std::vector<torch::Tensor> SharedParameters() const;
  ParamReport Report() const;

 private:
  bool conditioned() const;

  DiscriminatorConfig cfg_;
  // Layers applied to every level.
  torch::nn::Sequential shared_trunk_{nullptr};
  torch::nn::Conv2d shared_proj_{nullptr};
  // Level-specific layers, one entry per level when present.
  std::vector<torch::nn::Sequential> level_trunks_;
  std::vector<torch::nn::Conv2d> level_projs_;
};
TORCH_MODULE(Discriminator);

}  // namespace crdr

#endif  // CRDR_DISCRIMINATOR_HPP_
