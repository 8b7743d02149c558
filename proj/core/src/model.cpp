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

#include "crdr/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "crdr/error.hpp"

namespace crdr {
namespace {

constexpr double kLeakySlope = 0.2;
constexpr double kMinEntropyScale = 1e-2;
// Initial latent gain spread across levels: higher q, finer quantization.
constexpr double kLatentGainLow = 0.5;
constexpr double kLatentGainHigh = 2.0;

torch::Tensor Leaky(const torch::Tensor& x) {
  return torch::leaky_relu(x, kLeakySlope);
}

torch::nn::Conv2d Conv(int in, int out, int kernel, int stride) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel)
                               .stride(stride)
                               .padding(kernel / 2));
}

// Splits q into (lower level, upper level, fraction).
struct LevelBlend {
  std::int64_t lo;
  std::int64_t hi;
  double alpha;
};

LevelBlend Blend(double q, int num_levels) {
  if (!std::isfinite(q) || q < 0.0 || q > num_levels - 1) {
    throw DomainError("quality " + std::to_string(q) + " outside [0, " +
                      std::to_string(num_levels - 1) + "]");
  }
  const auto lo = static_cast<std::int64_t>(std::floor(q));
  const std::int64_t hi = std::min<std::int64_t>(lo + 1, num_levels - 1);
  return {lo, hi, q - static_cast<double>(lo)};
}

void CheckImage(const torch::Tensor& x, std::int64_t multiple) {
  if (x.dim() != 4 || x.size(1) != 3) {
    throw DimensionError("image tensor must have shape (N, 3, H, W)");
  }
  if (x.size(2) < 1 || x.size(3) < 1 || x.size(2) % multiple != 0 ||
      x.size(3) % multiple != 0) {
    throw DimensionError("image of " + std::to_string(x.size(2)) + "x" +
                         std::to_string(x.size(3)) +
                         " is not padded to a multiple of " +
                         std::to_string(multiple));
  }
}

}  // namespace

ModelConfig ModelConfig::FromConfig(const KeyValueConfig& kv) {
  ModelConfig cfg;
  cfg.num_levels = static_cast<int>(kv.GetInt("num_levels", cfg.num_levels));
  cfg.channels = static_cast<int>(kv.GetInt("channels", cfg.channels));
  cfg.latent_channels =
      static_cast<int>(kv.GetInt("latent_channels", cfg.latent_channels));
  cfg.beta_bands = static_cast<int>(kv.GetInt("beta_bands", cfg.beta_bands));
  cfg.film_hidden = static_cast<int>(kv.GetInt("film_hidden", cfg.film_hidden));
  cfg.beta_max = kv.GetDouble("beta_max", cfg.beta_max);
  cfg.Validate();
  return cfg;
}

void ModelConfig::WriteTo(KeyValueConfig& kv) const {
  kv.Set("num_levels", std::to_string(num_levels));
  kv.Set("channels", std::to_string(channels));
  kv.Set("latent_channels", std::to_string(latent_channels));
  kv.Set("beta_bands", std::to_string(beta_bands));
  kv.Set("film_hidden", std::to_string(film_hidden));
  kv.Set("beta_max", FormatDouble(beta_max));
}

void ModelConfig::Validate() const {
  if (num_levels < 1 || num_levels > 255) {
    throw DomainError("num_levels must be in [1, 255]");
  }
  if (channels < 1 || latent_channels < 1 || latent_channels > 65535 ||
      beta_bands < 1 || film_hidden < 1) {
    throw DomainError("model widths must be positive");
  }
  if (!(beta_max >= 0.0) || !std::isfinite(beta_max)) {
    throw DomainError("beta_max must be finite and nonnegative");
  }
}

torch::Tensor Quantize(const torch::Tensor& y, QuantizeMode mode) {
  if (!torch::isfinite(y).all().item<bool>()) {
    throw NumericError("latent contains non-finite values");
  }
  torch::Tensor rounded;
  {
    torch::NoGradGuard no_grad;
    rounded = torch::sign(y) * torch::floor(torch::abs(y) + 0.5);
  }
  if (mode == QuantizeMode::kInfer) return rounded;
  return y + (rounded - y).detach();
}

std::vector<double> BetaEmbedding(double beta, double beta_max, int bands) {
  const RealismWeight w(beta, beta_max);
  const double b = w.normalized();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * bands));
  for (int k = 0; k < bands; ++k) {
    const double arg = std::ldexp(std::numbers::pi, k) * b;
    out.push_back(std::sin(arg));
    out.push_back(std::cos(arg));
  }
  return out;
}

torch::Tensor FourierFeatures(const torch::Tensor& normalized_beta, int bands) {
  const auto freqs =
      torch::pow(2.0, torch::arange(bands, normalized_beta.options())) *
      std::numbers::pi;
  const auto args = normalized_beta.unsqueeze(1) * freqs.unsqueeze(0);
  return torch::stack({torch::sin(args), torch::cos(args)}, 2)
      .reshape({normalized_beta.size(0), 2 * bands});
}

IcaLayerImpl::IcaLayerImpl(int num_levels, int channels, double init_log_low,
                           double init_log_high) {
  auto init = torch::linspace(init_log_low, init_log_high, num_levels)
                  .unsqueeze(1)
                  .expand({num_levels, channels})
                  .clone();
  log_scales_ = register_parameter("log_scales", init);
}

torch::Tensor IcaLayerImpl::Scaling(double q) const {
  const LevelBlend b = Blend(q, num_levels());
  const auto lower = torch::exp(log_scales_[b.lo]);
  if (b.alpha == 0.0) return lower;
  return (1.0 - b.alpha) * lower + b.alpha * torch::exp(log_scales_[b.hi]);
}

torch::Tensor IcaLayerImpl::forward(const torch::Tensor& x, double q) const {
  if (x.size(1) != channels()) {
    throw DimensionError("ICA layer expects " + std::to_string(channels()) +
                         " channels");
  }
  return x * Scaling(q).view({1, -1, 1, 1});
}

ResidualBlockImpl::ResidualBlockImpl(int channels)
    : conv1_(register_module("conv1", Conv(channels, channels, 3, 1))),
      conv2_(register_module("conv2", Conv(channels, channels, 3, 1))) {}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  return x + conv2_(Leaky(conv1_(Leaky(x))));
}

FilmResidualBlockImpl::FilmResidualBlockImpl(int channels, int cond_features)
    : channels_(channels),
      conv1_(register_module("conv1", Conv(channels, channels, 3, 1))),
      conv2_(register_module("conv2", Conv(channels, channels, 3, 1))),
      film_(register_module("film",
                            torch::nn::Linear(cond_features, 2 * channels))) {}

torch::Tensor FilmResidualBlockImpl::forward(const torch::Tensor& x,
                                             const torch::Tensor& cond) {
  const auto film = film_(cond);
  const auto gamma = film.slice(1, 0, channels_).view({-1, channels_, 1, 1});
  const auto shift =
      film.slice(1, channels_, 2 * channels_).view({-1, channels_, 1, 1});
  auto h = conv1_(Leaky(x));
  h = h * (1.0 + gamma) + shift;
  return x + conv2_(Leaky(h));
}

EncoderImpl::EncoderImpl(const ModelConfig& cfg) {
  const int n = cfg.channels;
  const int widths[] = {3, n, n, n, cfg.latent_channels};
  for (int i = 0; i < 4; ++i) {
    down_.push_back(register_module("down" + std::to_string(i),
                                    Conv(widths[i], widths[i + 1], 5, 2)));
    if (i == 1 || i == 2) {
      blocks_.push_back(register_module("block" + std::to_string(i),
                                        ResidualBlock(widths[i + 1])));
    }
    const bool latent = i == 3;
    ica_.push_back(register_module(
        "ica" + std::to_string(i),
        IcaLayer(cfg.num_levels, widths[i + 1],
                 latent ? std::log(kLatentGainLow) : 0.0,
                 latent ? std::log(kLatentGainHigh) : 0.0)));
  }
}

torch::Tensor EncoderImpl::forward(const torch::Tensor& x, double q) {
  auto h = ica_[0](Leaky(down_[0](x * 2.0 - 1.0)), q);
  h = ica_[1](blocks_[0](down_[1](h)), q);
  h = ica_[2](blocks_[1](down_[2](h)), q);
  return ica_[3](down_[3](h), q);
}

BetaConditionerImpl::BetaConditionerImpl(const ModelConfig& cfg)
    : bands_(cfg.beta_bands),
      fc1_(register_module("fc1",
                           torch::nn::Linear(2 * cfg.beta_bands, cfg.film_hidden))),
      fc2_(register_module("fc2",
                           torch::nn::Linear(cfg.film_hidden, cfg.film_hidden))) {}

torch::Tensor BetaConditionerImpl::forward(const torch::Tensor& normalized_beta) {
  return Leaky(fc2_(Leaky(fc1_(FourierFeatures(normalized_beta, bands_)))));
}

GeneratorImpl::GeneratorImpl(const ModelConfig& cfg) {
  const int n = cfg.channels;
  ica_in_ = register_module(
      "ica_in", IcaLayer(cfg.num_levels, cfg.latent_channels,
                         std::log(1.0 / kLatentGainLow),
                         std::log(1.0 / kLatentGainHigh)));
  head_ = register_module("head", Conv(cfg.latent_channels, n, 3, 1));
  latent_blocks_.push_back(
      register_module("latent_block0", FilmResidualBlock(n, cfg.film_hidden)));
  for (int i = 0; i < 4; ++i) {
    const bool last = i == 3;
    up_.push_back(register_module("up" + std::to_string(i),
                                  Conv(n, last ? 3 * 4 : 4 * n, 3, 1)));
    if (i < 2) {
      up_blocks_.push_back(register_module("up_block" + std::to_string(i),
                                           FilmResidualBlock(n, cfg.film_hidden)));
    }
    if (!last) {
      ica_.push_back(register_module("ica" + std::to_string(i),
                                     IcaLayer(cfg.num_levels, n)));
    }
  }
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& y_hat, double q,
                                     const torch::Tensor& cond) {
  auto h = head_(ica_in_(y_hat, q));
  for (auto& block : latent_blocks_) h = block(h, cond);
  for (std::size_t i = 0; i < up_.size(); ++i) {
    h = torch::pixel_shuffle(up_[i](h), 2);
    if (i < up_blocks_.size()) {
      h = up_blocks_[i](h, cond);
    } else if (i + 1 < up_.size()) {
      h = Leaky(h);
    }
    if (i < ica_.size()) h = ica_[i](h, q);
  }
  return h + 0.5;
}

EntropyBankImpl::EntropyBankImpl(int num_levels, int channels) {
  location_ = register_parameter("location", torch::zeros({num_levels, channels}));
  log_scale_ = register_parameter("log_scale", torch::zeros({num_levels, channels}));
}

std::pair<torch::Tensor, torch::Tensor> EntropyBankImpl::ParamsAt(double q) const {
  const LevelBlend b = Blend(q, static_cast<int>(location_.size(0)));
  auto loc = location_[b.lo];
  auto scale = torch::exp(log_scale_[b.lo]);
  if (b.alpha != 0.0) {
    loc = (1.0 - b.alpha) * loc + b.alpha * location_[b.hi];
    scale = (1.0 - b.alpha) * scale + b.alpha * torch::exp(log_scale_[b.hi]);
  }
  return {loc, torch::clamp_min(scale, kMinEntropyScale)};
}

torch::Tensor EntropyBankImpl::Likelihood(const torch::Tensor& y_hat,
                                          double q) const {
  auto [loc, scale] = ParamsAt(q);
  loc = loc.view({1, -1, 1, 1});
  scale = scale.view({1, -1, 1, 1});
  const auto lower = (y_hat - 0.5 - loc) / scale;
  const auto upper = (y_hat + 0.5 - loc) / scale;
  // Evaluate on the tail where the difference of sigmoids is well conditioned.
  const auto sign =
      torch::where(lower + upper > 0, -torch::ones_like(lower),
                   torch::ones_like(lower))
          .detach();
  const auto p = torch::abs(torch::sigmoid(sign * upper) - torch::sigmoid(sign * lower));
  return torch::clamp_min(p, kProbabilityFloor);
}

EntropyParams EntropyBankImpl::EntropyParamsAt(double q) const {
  const LevelBlend b = Blend(q, static_cast<int>(location_.size(0)));
  const auto loc = location_.detach().to(torch::kDouble).contiguous();
  const auto ls = log_scale_.detach().to(torch::kDouble).contiguous();
  const auto c = location_.size(1);
  const double* lp = loc.data_ptr<double>();
  const double* sp = ls.data_ptr<double>();
  EntropyParams params;
  params.family = DensityFamily::kLogistic;
  params.channels.resize(static_cast<std::size_t>(c));
  for (std::int64_t i = 0; i < c; ++i) {
    double l = lp[b.lo * c + i];
    double s = std::exp(sp[b.lo * c + i]);
    if (b.alpha != 0.0) {
      l = (1.0 - b.alpha) * l + b.alpha * lp[b.hi * c + i];
      s = (1.0 - b.alpha) * s + b.alpha * std::exp(sp[b.hi * c + i]);
    }
    params.channels[static_cast<std::size_t>(i)] = {l, std::max(s, kMinEntropyScale)};
  }
  return params;
}

NicModelImpl::NicModelImpl(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  encoder_ = register_module("encoder", Encoder(cfg_));
  generator_ = register_module("generator", Generator(cfg_));
  conditioner_ = register_module("conditioner", BetaConditioner(cfg_));
  entropy_ = register_module("entropy",
                             EntropyBank(cfg_.num_levels, cfg_.latent_channels));
}

void NicModelImpl::CheckQ(double q) const { Blend(q, cfg_.num_levels); }

torch::Tensor NicModelImpl::Encode(const torch::Tensor& x, const QualityControl& qc) {
  CheckImage(x, kPadMultiple);
  return encoder_(x, qc.value());
}

torch::Tensor NicModelImpl::GenerateImpl(const torch::Tensor& y_hat, double q,
                                         double beta) {
  if (y_hat.dim() != 4 || y_hat.size(1) != cfg_.latent_channels) {
    throw DimensionError("latent must have shape (N, " +
                         std::to_string(cfg_.latent_channels) + ", h, w)");
  }
  const RealismWeight w(beta, cfg_.beta_max);
  const auto b = torch::full({y_hat.size(0)}, w.normalized(), y_hat.options());
  return generator_(y_hat, q, conditioner_(b));
}

torch::Tensor NicModelImpl::Generate(const torch::Tensor& y_hat,
                                     const QualityControl& qc,
                                     const RealismWeight& beta) {
  return torch::clamp(GenerateImpl(y_hat, qc.value(), beta.beta()), 0.0, 1.0);
}

NicOutput NicModelImpl::Forward(const torch::Tensor& x, double q, double beta) {
  CheckImage(x, kPadMultiple);
  CheckQ(q);
  ++forward_count_;
  NicOutput out;
  out.y = encoder_(x, q);
  out.y_hat = Quantize(out.y, QuantizeMode::kTrain);
  out.likelihoods = entropy_->Likelihood(out.y_hat, q);
  out.x_hat = StraightThroughClamp(GenerateImpl(out.y_hat, q, beta));
  return out;
}

torch::Tensor NicModelImpl::RateBpp(const torch::Tensor& likelihoods,
                                    std::int64_t height, std::int64_t width) {
  const double pixels = static_cast<double>(likelihoods.size(0) * height * width);
  return -torch::log2(likelihoods).sum() / pixels;
}

std::map<std::string, std::int64_t> NicModelImpl::ParameterCounts() const {
  std::map<std::string, std::int64_t> counts{{"encoder", 0},
                                             {"generator", 0},
                                             {"beta_conditioning", 0},
                                             {"entropy", 0},
                                             {"ica_encoder", 0},
                                             {"ica_generator", 0}};
  for (const auto& item : named_parameters()) {
    const std::string& name = item.key();
    const std::int64_t n = item.value().numel();
    const bool ica = name.find(".ica") != std::string::npos;
    if (name.rfind("encoder.", 0) == 0) {
      counts["encoder"] += n;
      if (ica) counts["ica_encoder"] += n;
    } else if (name.rfind("generator.", 0) == 0) {
      if (name.find(".film.") != std::string::npos) {
        counts["beta_conditioning"] += n;
      } else {
        counts["generator"] += n;
        if (ica) counts["ica_generator"] += n;
      }
    } else if (name.rfind("conditioner.", 0) == 0) {
      counts["beta_conditioning"] += n;
    } else if (name.rfind("entropy.", 0) == 0) {
      counts["entropy"] += n;
    }
  }
  return counts;
}

std::vector<torch::Tensor> NicModelImpl::ModulationParameters() const {
  std::vector<torch::Tensor> out;
  for (const auto& item : named_parameters()) {
    const std::string& name = item.key();
    if (name.rfind("conditioner.", 0) == 0 ||
        name.find(".film.") != std::string::npos) {
      out.push_back(item.value());
    }
  }
  return out;
}

torch::Tensor StraightThroughClamp(const torch::Tensor& x) {
  return x + (torch::clamp(x, 0.0, 1.0) - x).detach();
}

QuantizedLatent ToQuantizedLatent(const torch::Tensor& y_hat) {
  if (y_hat.dim() != 4) throw DimensionError("latent must be 4-D");
  const auto ints = torch::round(y_hat[0].detach())
                        .to(torch::kInt32)
                        .contiguous();
  QuantizedLatent latent;
  latent.channels = ints.size(0);
  latent.height = ints.size(1);
  latent.width = ints.size(2);
  const std::int32_t* p = ints.data_ptr<std::int32_t>();
  latent.values.assign(p, p + ints.numel());
  return latent;
}

torch::Tensor FromQuantizedLatent(const QuantizedLatent& latent,
                                  torch::ScalarType dtype) {
  auto t = torch::from_blob(const_cast<std::int32_t*>(latent.values.data()),
                            {1, latent.channels, latent.height, latent.width},
                            torch::kInt32);
  return t.to(dtype);
}

std::int64_t CountParameters(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

}  // namespace crdr
