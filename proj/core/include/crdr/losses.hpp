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

#ifndef CRDR_LOSSES_HPP_
#define CRDR_LOSSES_HPP_

// Training objectives: distortion, perceptual distance, the adversarial
// losses (standard, relativistic, relativistic average, and the
// higher-rate relativistic loss), and the two stage totals.
//
// Score maps are discriminator logits of shape (N, 1, h, w). Per-position
// losses are averaged over positions and batch.

#include <torch/torch.h>

#include <array>
#include <string>
#include <vector>

#include "crdr/config.hpp"
#include "crdr/discriminator.hpp"
#include "crdr/model.hpp"
#include "crdr/perceptual.hpp"

namespace crdr {

enum class AdvKind { kSgan, kRgan, kRagan, kHrrgan };

inline constexpr std::array<AdvKind, 4> kAllAdvKinds = {
    AdvKind::kSgan, AdvKind::kRgan, AdvKind::kRagan, AdvKind::kHrrgan};

std::string ToString(AdvKind kind);
// Case-insensitive; throws DomainError for unknown names.
AdvKind ParseAdvKind(const std::string& name);

// -log(sigmoid(z)), evaluated without overflow.
torch::Tensor NegLogSigmoid(const torch::Tensor& z);

// Mean squared error on the 0-255 scale.
torch::Tensor Distortion(const torch::Tensor& x, const torch::Tensor& x_hat);
// Mean squared error on the [0, 1] scale; the distortion term of the
// training objectives.
torch::Tensor UnitMse(const torch::Tensor& x, const torch::Tensor& x_hat);
// Batch mean of metric.Distance.
torch::Tensor Perceptual(const torch::Tensor& x, const torch::Tensor& x_hat,
                         PerceptualMetric& metric);

// Generator-side adversarial loss.
//   kSgan:   mean -log s(D(fake))                        (real unused)
//   kRgan:   mean -log s(D(fake) - D(real))
//   kRagan:  mean -log s(D(fake) - E[D(real)]) - log(1 - s(D(real) - E[D(fake)]))
//   kHrrgan: mean -log s(D(fake) - sg(reference))
// For kHrrgan `real` is the reference map (higher-level reconstruction or,
// at the top level, the original image) and receives no gradient.
// Throws DimensionError on mismatched shapes.
torch::Tensor AdvGeneratorLoss(AdvKind kind, const torch::Tensor& fake,
                               const torch::Tensor& real);

// Discriminator-side loss. kRgan and kHrrgan coincide.
//   kSgan:  mean -log s(D(real)) + mean -log(1 - s(D(fake)))
//   kRgan:  mean -log s(D(real) - D(fake))
//   kRagan: mean -log s(D(real) - E[D(fake)]) - log(1 - s(D(fake) - E[D(real)]))
torch::Tensor AdvDiscriminatorLoss(AdvKind kind, const torch::Tensor& real,
                                   const torch::Tensor& fake);

struct LossWeights {
  std::vector<double> rate = {3.4, 1.3, 0.4, 0.12, 0.05};
  double distortion = 150.0;
  double perceptual = 2.0 / kDefaultBetaMax;
  double adversarial = 0.002 / kDefaultBetaMax;
  double beta_max = kDefaultBetaMax;

  // Reads lambda_r, lambda_d, lambda_p, lambda_adv, beta_max. lambda_p and
  // lambda_adv default to 2 / beta_max and 0.002 / beta_max.
  static LossWeights FromConfig(const KeyValueConfig& kv);
  void WriteTo(KeyValueConfig& kv) const;
  // Throws DomainError unless all weights are positive and the rate
  // weights strictly decrease with q.
  void Validate() const;
};

// Unweighted terms of one step. Tensors are 0-dim; adversarial may be
// undefined in stage 1.
struct LossTerms {
  torch::Tensor rate;         // bits per pixel
  torch::Tensor distortion;   // UnitMse
  torch::Tensor perceptual;
  torch::Tensor adversarial;  // generator-side
};

struct LossBreakdown {
  double rate = 0.0;
  double distortion = 0.0;
  double perceptual = 0.0;
  double adversarial = 0.0;
  double total = 0.0;
};

struct StageLoss {
  torch::Tensor total;
  LossBreakdown breakdown;
};

// lambda_R(q) R + lambda_d d + L_P
StageLoss Stage1Total(const LossTerms& terms, const LossWeights& w, int q);
// lambda_R(q) R + lambda_d d + beta (lambda_P L_P + lambda_adv L_adv). With
// beta == 0 the perceptual and adversarial terms are not touched.
StageLoss Stage2Total(const LossTerms& terms, const LossWeights& w, int q,
                      double beta);

struct GeneratorAdversarial {
  torch::Tensor loss;
  torch::Tensor fake_scores;
  torch::Tensor reference_scores;  // detached for kHrrgan
  bool reference_is_original = false;
  int extra_forwards = 0;          // NIC passes beyond the one for x_hat_q
};

// Generator-side adversarial loss for a reconstruction out.x_hat of x at
// level q. kHrrgan runs a second no-grad model pass at q + 1 (same beta)
// when q < Q - 1 and otherwise uses the original image as reference.
GeneratorAdversarial ComputeGeneratorAdversarial(AdvKind kind,
                                                 const torch::Tensor& x, int q,
                                                 double beta, NicModel& model,
                                                 Discriminator& disc,
                                                 const NicOutput& out);

// Discriminator-side loss on the real image and a detached reconstruction.
torch::Tensor ComputeDiscriminatorAdversarial(AdvKind kind,
                                              const torch::Tensor& x,
                                              const torch::Tensor& x_hat, int q,
                                              Discriminator& disc);

struct HrrganResult {
  torch::Tensor generator_loss;
  torch::Tensor discriminator_loss;
  NicOutput output;
  bool reference_is_original = false;
  int nic_forwards = 0;
};

// Both higher-rate relativistic losses for one (x, q, beta).
HrrganResult HrrganPair(const torch::Tensor& x, int q, double beta,
                        NicModel& model, Discriminator& disc);

}  // namespace crdr

#endif  // CRDR_LOSSES_HPP_
