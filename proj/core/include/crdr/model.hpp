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

#ifndef CRDR_MODEL_HPP_
#define CRDR_MODEL_HPP_

// Encoder, quantizer and beta-conditioned generator. Images are float or
// double tensors of shape (N, 3, H, W) with values in [0, 1]; latents are
// (N, C, H/16, W/16).

#include <torch/torch.h>

#include <atomic>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crdr/config.hpp"
#include "crdr/entropy.hpp"
#include "crdr/quality.hpp"

namespace crdr {

struct ModelConfig {
  int num_levels = 5;
  int channels = 64;
  int latent_channels = 32;
  int beta_bands = 8;
  int film_hidden = 64;
  double beta_max = kDefaultBetaMax;

  static ModelConfig FromConfig(const KeyValueConfig& kv);
  void WriteTo(KeyValueConfig& kv) const;
  // Throws DomainError on nonsensical sizes.
  void Validate() const;
};

// Spatial reduction of the encoder (four stride-2 stages).
inline constexpr std::int64_t kLatentStride = 16;
// Images are padded to this multiple before coding.
inline constexpr std::int64_t kPadMultiple = 64;

enum class QuantizeMode { kTrain, kInfer };

// Element-wise rounding with ties away from zero. kTrain returns
// y + stopgrad(round(y) - y) so the backward pass is the identity. Throws
// NumericError on non-finite input.
torch::Tensor Quantize(const torch::Tensor& y, QuantizeMode mode);

// [sin(2^k pi b), cos(2^k pi b)] for k = 0..bands-1, b = beta / beta_max.
// Throws DomainError if beta is outside [0, beta_max].
std::vector<double> BetaEmbedding(double beta, double beta_max, int bands);

// Differentiable version over a tensor of normalized betas, shape (N) ->
// (N, 2 * bands), same interleaving as BetaEmbedding.
torch::Tensor FourierFeatures(const torch::Tensor& normalized_beta, int bands);

// Q learnable channel-scaling vectors, stored as logarithms.
class IcaLayerImpl : public torch::nn::Module {
 public:
  IcaLayerImpl(int num_levels, int channels, double init_log_low = 0.0,
               double init_log_high = 0.0);

  // Positive scaling vector for q in [0, Q-1]: the stored vector at integer
  // q, otherwise the linear blend of the two neighbouring vectors.
  torch::Tensor Scaling(double q) const;
  torch::Tensor forward(const torch::Tensor& x, double q) const;

  int num_levels() const { return static_cast<int>(log_scales_.size(0)); }
  int channels() const { return static_cast<int>(log_scales_.size(1)); }
  torch::Tensor& log_scales() { return log_scales_; }

 private:
  torch::Tensor log_scales_;
};
TORCH_MODULE(IcaLayer);

class ResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ResidualBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::Conv2d conv2_{nullptr};
};
TORCH_MODULE(ResidualBlock);

// Residual block whose inner activation is modulated per channel:
// h * (1 + gamma) + shift, with (gamma, shift) projected from the beta
// conditioning features.
class FilmResidualBlockImpl : public torch::nn::Module {
 public:
  FilmResidualBlockImpl(int channels, int cond_features);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& cond);

 private:
  int channels_;
  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::Conv2d conv2_{nullptr};
  torch::nn::Linear film_{nullptr};
};
TORCH_MODULE(FilmResidualBlock);

class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& x, double q);

 private:
  std::vector<torch::nn::Conv2d> down_;
  std::vector<ResidualBlock> blocks_;
  std::vector<IcaLayer> ica_;
};
TORCH_MODULE(Encoder);

// Fourier features -> small MLP -> shared conditioning vector.
class BetaConditionerImpl : public torch::nn::Module {
 public:
  explicit BetaConditionerImpl(const ModelConfig& cfg);
  // (N) normalized betas -> (N, film_hidden).
  torch::Tensor forward(const torch::Tensor& normalized_beta);

 private:
  int bands_;
  torch::nn::Linear fc1_{nullptr};
  torch::nn::Linear fc2_{nullptr};
};
TORCH_MODULE(BetaConditioner);

class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const ModelConfig& cfg);
  // cond: output of BetaConditioner. Result is unclamped.
  torch::Tensor forward(const torch::Tensor& y_hat, double q,
                        const torch::Tensor& cond);

 private:
  IcaLayer ica_in_{nullptr};
  torch::nn::Conv2d head_{nullptr};
  std::vector<FilmResidualBlock> latent_blocks_;
  std::vector<torch::nn::Conv2d> up_;
  std::vector<FilmResidualBlock> up_blocks_;
  std::vector<IcaLayer> ica_;
};
TORCH_MODULE(Generator);

// Per-level factorized logistic model: Q banks of (location, log scale) per
// latent channel, blended across levels like the ICA vectors.
class EntropyBankImpl : public torch::nn::Module {
 public:
  EntropyBankImpl(int num_levels, int channels);

  // (location, scale), each of shape (C).
  std::pair<torch::Tensor, torch::Tensor> ParamsAt(double q) const;
  // Differentiable bin probabilities of y_hat (N, C, h, w), floored.
  torch::Tensor Likelihood(const torch::Tensor& y_hat, double q) const;
  // Double-precision parameters for table construction.
  EntropyParams EntropyParamsAt(double q) const;

 private:
  torch::Tensor location_;
  torch::Tensor log_scale_;
};
TORCH_MODULE(EntropyBank);

// Reconstruction and rate terms from one pass through the model.
struct NicOutput {
  torch::Tensor y;            // continuous latent
  torch::Tensor y_hat;        // quantized latent (STE in training)
  torch::Tensor likelihoods;  // same shape as y_hat
  torch::Tensor x_hat;        // clamped reconstruction
};

class NicModelImpl : public torch::nn::Module {
 public:
  explicit NicModelImpl(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  // Throws DimensionError unless H and W are positive multiples of 64.
  torch::Tensor Encode(const torch::Tensor& x, const QualityControl& qc);
  torch::Tensor Generate(const torch::Tensor& y_hat, const QualityControl& qc,
                         const RealismWeight& beta);

  // encode -> STE quantize -> likelihood -> generate at integer or
  // fractional q. Counts one NIC forward.
  NicOutput Forward(const torch::Tensor& x, double q, double beta);

  // Rate in bits per pixel of the original image for each batch element,
  // averaged: -sum log2 p / (N * H * W).
  static torch::Tensor RateBpp(const torch::Tensor& likelihoods,
                               std::int64_t height, std::int64_t width);

  EntropyBank& entropy() { return entropy_; }
  const EntropyBank& entropy() const { return entropy_; }

  std::int64_t forward_count() const { return forward_count_.load(); }
  void reset_forward_count() { forward_count_ = 0; }

  // Parameter counts by component: encoder, generator, entropy,
  // beta_conditioning, ica (subset of encoder + generator).
  std::map<std::string, std::int64_t> ParameterCounts() const;

  // Parameters of the modulation path (conditioner MLP + FiLM projections).
  std::vector<torch::Tensor> ModulationParameters() const;

 private:
  torch::Tensor GenerateImpl(const torch::Tensor& y_hat, double q, double beta);
  void CheckQ(double q) const;

  ModelConfig cfg_;
  Encoder encoder_{nullptr};
  Generator generator_{nullptr};
  BetaConditioner conditioner_{nullptr};
  EntropyBank entropy_{nullptr};
  std::atomic<std::int64_t> forward_count_{0};
};
TORCH_MODULE(NicModel);

// Clamp to [0, 1] whose gradient is the identity.
torch::Tensor StraightThroughClamp(const torch::Tensor& x);

// Converts the first batch element of an integer-valued latent tensor.
QuantizedLatent ToQuantizedLatent(const torch::Tensor& y_hat);
torch::Tensor FromQuantizedLatent(const QuantizedLatent& latent,
                                  torch::ScalarType dtype = torch::kFloat);

std::int64_t CountParameters(const torch::nn::Module& module);

}  // namespace crdr

#endif  // CRDR_MODEL_HPP_
