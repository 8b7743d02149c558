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

#ifndef CRDR_PERCEPTUAL_HPP_
#define CRDR_PERCEPTUAL_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <string>

namespace crdr {

// Differentiable image distance used as the perceptual term. Implementations
// return one nonnegative value per batch element.
class PerceptualMetric {
 public:
  virtual ~PerceptualMetric() = default;
  virtual torch::Tensor Distance(const torch::Tensor& x, const torch::Tensor& y) = 0;
  virtual std::string name() const = 0;
  virtual void To(torch::ScalarType dtype) = 0;
};

// Three 3x3 conv layers (3->16 stride 1, 16->32 stride 2, 32->32 stride 2).
// The first, linear layer contributes a plain squared feature difference,
// which makes the distance zero only for identical inputs; the two ReLU
// layers contribute channel-normalized squared differences averaged over
// positions, in the manner of learned perceptual metrics.
class FeatureStackImpl : public torch::nn::Module {
 public:
  FeatureStackImpl();
  torch::Tensor Distance(const torch::Tensor& x, const torch::Tensor& y);

 private:
  torch::nn::Conv2d conv0_{nullptr};
  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::Conv2d conv2_{nullptr};
};
TORCH_MODULE(FeatureStack);

class FeatureStackMetric : public PerceptualMetric {
 public:
  // Frozen random weights drawn from a dedicated generator seeded with seed.
  static std::unique_ptr<FeatureStackMetric> FromSeed(std::uint64_t seed);
  // Weights (conv{0,1,2}.{weight,bias}) from a tensor archive, e.g. exported
  // from a pretrained network. Throws FormatError on missing arrays.
  static std::unique_ptr<FeatureStackMetric> FromFile(const std::string& path);

  torch::Tensor Distance(const torch::Tensor& x, const torch::Tensor& y) override;
  std::string name() const override { return name_; }
  void To(torch::ScalarType dtype) override { stack_->to(dtype); }

  FeatureStack& stack() { return stack_; }

 private:
  FeatureStackMetric(FeatureStack stack, std::string name);

  FeatureStack stack_;
  std::string name_;
};

inline constexpr std::uint64_t kDefaultPerceptualSeed = 20240229;

}  // namespace crdr

#endif  // CRDR_PERCEPTUAL_HPP_
