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

#include "crdr/perceptual.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

#include "crdr/checkpoint.hpp"
#include "crdr/error.hpp"

namespace crdr {
namespace {

constexpr double kNormEps = 1e-6;

torch::nn::Conv2d Conv(int in, int out, int stride) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

torch::Tensor UnitNormalize(const torch::Tensor& f) {
  return f / torch::sqrt(f.pow(2).sum(1, true) + kNormEps);
}

torch::Tensor NormalizedDistance(const torch::Tensor& a, const torch::Tensor& b) {
  return (UnitNormalize(a) - UnitNormalize(b)).pow(2).sum(1).mean({1, 2});
}

}  // namespace

FeatureStackImpl::FeatureStackImpl()
    : conv0_(register_module("conv0", Conv(3, 16, 1))),
      conv1_(register_module("conv1", Conv(16, 32, 2))),
      conv2_(register_module("conv2", Conv(32, 32, 2))) {
  for (auto& p : parameters()) p.set_requires_grad(false);
}

torch::Tensor FeatureStackImpl::Distance(const torch::Tensor& x,
                                         const torch::Tensor& y) {
  if (x.sizes() != y.sizes() || x.dim() != 4 || x.size(1) != 3) {
    throw DimensionError("perceptual distance needs two (N, 3, H, W) images");
  }
  const auto fx0 = conv0_(x * 2.0 - 1.0);
  const auto fy0 = conv0_(y * 2.0 - 1.0);
  const auto d0 = (fx0 - fy0).pow(2).mean({1, 2, 3});
  const auto fx1 = torch::relu(conv1_(torch::relu(fx0)));
  const auto fy1 = torch::relu(conv1_(torch::relu(fy0)));
  const auto fx2 = torch::relu(conv2_(fx1));
  const auto fy2 = torch::relu(conv2_(fy1));
  return d0 + NormalizedDistance(fx1, fy1) + NormalizedDistance(fx2, fy2);
}

FeatureStackMetric::FeatureStackMetric(FeatureStack stack, std::string name)
    : stack_(std::move(stack)), name_(std::move(name)) {}

std::unique_ptr<FeatureStackMetric> FeatureStackMetric::FromSeed(std::uint64_t seed) {
  FeatureStack stack;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  torch::NoGradGuard no_grad;
  for (auto& item : stack->named_parameters()) {
    auto& p = item.value();
    if (item.key().ends_with("bias")) {
      p.zero_();
    } else {
      const double fan_in = static_cast<double>(p.size(1) * p.size(2) * p.size(3));
      p.copy_(torch::randn(p.sizes(), gen, torch::kFloat) * std::sqrt(2.0 / fan_in));
    }
  }
  return std::unique_ptr<FeatureStackMetric>(new FeatureStackMetric(
      std::move(stack), "feature_stack(seed=" + std::to_string(seed) + ")"));
}

std::unique_ptr<FeatureStackMetric> FeatureStackMetric::FromFile(
    const std::string& path) {
  const TensorArchive archive = TensorArchive::Load(path);
  FeatureStack stack;
  LoadParameters(*stack, archive, "");
  return std::unique_ptr<FeatureStackMetric>(
      new FeatureStackMetric(std::move(stack), "feature_stack(" + path + ")"));
}

torch::Tensor FeatureStackMetric::Distance(const torch::Tensor& x,
                                           const torch::Tensor& y) {
  return stack_->Distance(x, y);
}

}  // namespace crdr
