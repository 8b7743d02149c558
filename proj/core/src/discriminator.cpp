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

#include "crdr/discriminator.hpp"

#include <string>

#include "crdr/error.hpp"

namespace crdr {
namespace {

constexpr double kLeakySlope = 0.2;

void AddBlock(torch::nn::Sequential& seq, int in, int out) {
  seq->push_back(torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, 3).stride(2).padding(1)));
  seq->push_back(torch::nn::LeakyReLU(
      torch::nn::LeakyReLUOptions().negative_slope(kLeakySlope)));
}

// Conv blocks [first, last) of the base network.
torch::nn::Sequential MakeTrunk(const std::array<int, 4>& widths, int first,
                                int last, int in_channels) {
  torch::nn::Sequential seq;
  int in = in_channels;
  for (int i = first; i < last; ++i) {
    AddBlock(seq, in, widths[i]);
    in = widths[i];
  }
  return seq;
}

torch::nn::Conv2d MakeProj(int in) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, 1, 1));
}

std::int64_t Count(const std::vector<torch::Tensor>& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

}  // namespace

std::string ToString(DesignKind kind) {
  switch (kind) {
    case DesignKind::kIndependent: return "independent";
    case DesignKind::kShared: return "shared";
    case DesignKind::kHybridHead: return "hybrid_head";
    case DesignKind::kHybridBackbone: return "hybrid_backbone";
    case DesignKind::kSharedNoCond: return "shared_no_cond";
  }
  return "unknown";
}

DesignKind ParseDesignKind(const std::string& name) {
  for (const DesignKind k : kAllDesigns) {
    if (ToString(k) == name) return k;
  }
  throw DomainError("unknown discriminator design '" + name + "'");
}

torch::Tensor MakeCondition(int q, std::int64_t height, std::int64_t width,
                            int num_levels, const torch::TensorOptions& options) {
  if (q < 0 || q >= num_levels) {
    throw DomainError("quality level " + std::to_string(q) + " outside [0, " +
                      std::to_string(num_levels - 1) + "]");
  }
  auto c = torch::zeros({1, num_levels, height, width}, options);
  c.select(1, q).fill_(1.0);
  return c;
}

DiscriminatorImpl::DiscriminatorImpl(const DiscriminatorConfig& cfg) : cfg_(cfg) {
  if (cfg_.num_levels < 1) throw DomainError("num_levels must be >= 1");
  const int q_count = cfg_.num_levels;
  const auto& w = cfg_.widths;
  const int cond = q_count;
  switch (cfg_.kind) {
    case DesignKind::kIndependent:
      for (int q = 0; q < q_count; ++q) {
        level_trunks_.push_back(register_module(
            "level" + std::to_string(q) + "_trunk", MakeTrunk(w, 0, 4, 3)));
        level_projs_.push_back(register_module(
            "level" + std::to_string(q) + "_proj", MakeProj(w[3])));
      }
      break;
    case DesignKind::kShared:
    case DesignKind::kSharedNoCond: {
      const int in = cfg_.kind == DesignKind::kShared ? 3 + cond : 3;
      shared_trunk_ = register_module("shared_trunk", MakeTrunk(w, 0, 4, in));
      shared_proj_ = register_module("shared_proj", MakeProj(w[3]));
      break;
    }
    case DesignKind::kHybridHead:
      for (int q = 0; q < q_count; ++q) {
        level_trunks_.push_back(register_module(
            "level" + std::to_string(q) + "_trunk", MakeTrunk(w, 0, 3, 3)));
      }
      shared_trunk_ = register_module("shared_trunk", MakeTrunk(w, 3, 4, w[2] + cond));
      shared_proj_ = register_module("shared_proj", MakeProj(w[3]));
      break;
    case DesignKind::kHybridBackbone:
      shared_trunk_ = register_module("shared_trunk", MakeTrunk(w, 0, 4, 3 + cond));
      for (int q = 0; q < q_count; ++q) {
        level_projs_.push_back(register_module(
            "level" + std::to_string(q) + "_proj", MakeProj(w[3])));
      }
      break;
  }
}

bool DiscriminatorImpl::conditioned() const {
  return cfg_.kind == DesignKind::kShared || cfg_.kind == DesignKind::kHybridHead ||
         cfg_.kind == DesignKind::kHybridBackbone;
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& image, int q) {
  if (image.dim() != 4 || image.size(1) != 3) {
    throw DimensionError("discriminator input must have shape (N, 3, H, W)");
  }
  const auto h = image.size(2);
  const auto w = image.size(3);
  if (h < 16 || w < 16 || h % 16 != 0 || w % 16 != 0) {
    throw DimensionError("discriminator input " + std::to_string(h) + "x" +
                         std::to_string(w) + " is not a multiple of 16");
  }
  if (q < 0 || q >= cfg_.num_levels) {
    throw DomainError("quality level " + std::to_string(q) + " outside [0, " +
                      std::to_string(cfg_.num_levels - 1) + "]");
  }
  const auto with_condition = [&](const torch::Tensor& x) {
    const auto c = MakeCondition(q, x.size(2), x.size(3), cfg_.num_levels,
                                 x.options())
                       .expand({x.size(0), cfg_.num_levels, x.size(2), x.size(3)});
    return torch::cat({x, c}, 1);
  };
  const auto x = image * 2.0 - 1.0;
  const auto level = static_cast<std::size_t>(q);
  switch (cfg_.kind) {
    case DesignKind::kIndependent:
      return level_projs_[level](level_trunks_[level]->forward(x));
    case DesignKind::kShared:
      return shared_proj_(shared_trunk_->forward(with_condition(x)));
    case DesignKind::kSharedNoCond:
      return shared_proj_(shared_trunk_->forward(x));
    case DesignKind::kHybridHead: {
      const auto features = level_trunks_[level]->forward(x);
      return shared_proj_(shared_trunk_->forward(with_condition(features)));
    }
    case DesignKind::kHybridBackbone:
      return level_projs_[level](shared_trunk_->forward(with_condition(x)));
  }
  return {};
}

std::vector<torch::Tensor> DiscriminatorImpl::LevelParameters(int q) const {
  std::vector<torch::Tensor> out;
  const auto level = static_cast<std::size_t>(q);
  if (level < level_trunks_.size()) {
    for (const auto& p : level_trunks_[level]->parameters()) out.push_back(p);
  }
  if (level < level_projs_.size()) {
    for (const auto& p : level_projs_[level]->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<torch::Tensor> DiscriminatorImpl::SharedParameters() const {
  std::vector<torch::Tensor> out;
  if (shared_trunk_) {
    for (const auto& p : shared_trunk_->parameters()) out.push_back(p);
  }
  if (shared_proj_) {
    for (const auto& p : shared_proj_->parameters()) out.push_back(p);
  }
  return out;
}

ParamReport DiscriminatorImpl::Report() const {
  ParamReport r;
  r.shared = Count(SharedParameters());
  r.total = r.shared;
  const bool has_levels = !level_trunks_.empty() || !level_projs_.empty();
  if (has_levels) {
    for (int q = 0; q < cfg_.num_levels; ++q) {
      r.per_level.push_back(Count(LevelParameters(q)));
      r.total += r.per_level.back();
    }
  }
  return r;
}

}  // namespace crdr
