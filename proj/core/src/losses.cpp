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

#include "crdr/losses.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "crdr/error.hpp"

namespace crdr {
namespace {

void CheckAligned(const torch::Tensor& a, const torch::Tensor& b) {
  if (!a.defined() || !b.defined() || a.sizes() != b.sizes()) {
    throw DimensionError("score maps are not spatially aligned");
  }
}

double Value(const torch::Tensor& t) {
  return t.defined() ? t.detach().to(torch::kDouble).item<double>() : 0.0;
}

}  // namespace

std::string ToString(AdvKind kind) {
  switch (kind) {
    case AdvKind::kSgan: return "sgan";
    case AdvKind::kRgan: return "rgan";
    case AdvKind::kRagan: return "ragan";
    case AdvKind::kHrrgan: return "hrrgan";
  }
  return "unknown";
}

AdvKind ParseAdvKind(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (const AdvKind k : kAllAdvKinds) {
    if (ToString(k) == lower) return k;
  }
  throw DomainError("unknown adversarial loss '" + name + "'");
}

torch::Tensor NegLogSigmoid(const torch::Tensor& z) {
  // softplus keeps the derivative exact at z == 0, where relu/abs
  // subgradients would both report zero. Above the threshold it returns -z,
  // off by less than e^-40.
  return torch::softplus(-z, 1.0, 40.0);
}

torch::Tensor Distortion(const torch::Tensor& x, const torch::Tensor& x_hat) {
  if (x.sizes() != x_hat.sizes()) throw DimensionError("image shapes differ");
  return (x - x_hat).mul(255.0).pow(2).mean();
}

torch::Tensor UnitMse(const torch::Tensor& x, const torch::Tensor& x_hat) {
  if (x.sizes() != x_hat.sizes()) throw DimensionError("image shapes differ");
  return (x - x_hat).pow(2).mean();
}

torch::Tensor Perceptual(const torch::Tensor& x, const torch::Tensor& x_hat,
                         PerceptualMetric& metric) {
  return metric.Distance(x, x_hat).mean();
}

torch::Tensor AdvGeneratorLoss(AdvKind kind, const torch::Tensor& fake,
                               const torch::Tensor& real) {
  switch (kind) {
    case AdvKind::kSgan:
      if (!fake.defined()) throw DimensionError("missing fake scores");
      return NegLogSigmoid(fake).mean();
    case AdvKind::kRgan:
      CheckAligned(fake, real);
      return NegLogSigmoid(fake - real).mean();
    case AdvKind::kRagan:
      CheckAligned(fake, real);
      // -log(1 - s(z)) == -log s(-z)
      return (NegLogSigmoid(fake - real.mean()) +
              NegLogSigmoid(-(real - fake.mean())))
          .mean();
    case AdvKind::kHrrgan:
      CheckAligned(fake, real);
      return NegLogSigmoid(fake - real.detach()).mean();
  }
  return {};
}

torch::Tensor AdvDiscriminatorLoss(AdvKind kind, const torch::Tensor& real,
                                   const torch::Tensor& fake) {
  switch (kind) {
    case AdvKind::kSgan:
      if (!real.defined() || !fake.defined()) {
        throw DimensionError("missing score maps");
      }
      return NegLogSigmoid(real).mean() + NegLogSigmoid(-fake).mean();
    case AdvKind::kRgan:
    case AdvKind::kHrrgan:
      CheckAligned(real, fake);
      return NegLogSigmoid(real - fake).mean();
    case AdvKind::kRagan:
      CheckAligned(real, fake);
      return (NegLogSigmoid(real - fake.mean()) +
              NegLogSigmoid(-(fake - real.mean())))
          .mean();
  }
  return {};
}

LossWeights LossWeights::FromConfig(const KeyValueConfig& kv) {
  LossWeights w;
  w.beta_max = kv.GetDouble("beta_max", w.beta_max);
  w.rate = kv.GetDoubleList("lambda_r", w.rate);
  w.distortion = kv.GetDouble("lambda_d", w.distortion);
  w.perceptual = kv.GetDouble("lambda_p", 2.0 / w.beta_max);
  w.adversarial = kv.GetDouble("lambda_adv", 0.002 / w.beta_max);
  w.Validate();
  return w;
}

void LossWeights::WriteTo(KeyValueConfig& kv) const {
  kv.Set("lambda_r", JoinDoubles(rate));
  kv.Set("lambda_d", FormatDouble(distortion));
  kv.Set("lambda_p", FormatDouble(perceptual));
  kv.Set("lambda_adv", FormatDouble(adversarial));
  kv.Set("beta_max", FormatDouble(beta_max));
}

void LossWeights::Validate() const {
  if (rate.empty()) throw DomainError("lambda_r must not be empty");
  for (std::size_t i = 0; i < rate.size(); ++i) {
    if (!(rate[i] > 0.0)) throw DomainError("lambda_r entries must be positive");
    if (i > 0 && !(rate[i] < rate[i - 1])) {
      throw DomainError("lambda_r must strictly decrease with q");
    }
  }
  if (!(distortion > 0.0) || !(perceptual > 0.0) || !(adversarial > 0.0) ||
      !(beta_max > 0.0)) {
    throw DomainError("loss weights must be positive");
  }
}

namespace {

double RateWeight(const LossWeights& w, int q) {
  if (q < 0 || q >= static_cast<int>(w.rate.size())) {
    throw DomainError("no rate weight for quality level " + std::to_string(q));
  }
  return w.rate[static_cast<std::size_t>(q)];
}

StageLoss RateDistortion(const LossTerms& terms, const LossWeights& w, int q) {
  StageLoss s;
  s.total = RateWeight(w, q) * terms.rate + w.distortion * terms.distortion;
  s.breakdown.rate = Value(terms.rate);
  s.breakdown.distortion = Value(terms.distortion);
  s.breakdown.perceptual = Value(terms.perceptual);
  s.breakdown.adversarial = Value(terms.adversarial);
  return s;
}

}  // namespace

StageLoss Stage1Total(const LossTerms& terms, const LossWeights& w, int q) {
  StageLoss s = RateDistortion(terms, w, q);
  if (terms.perceptual.defined()) s.total = s.total + terms.perceptual;
  s.breakdown.total = Value(s.total);
  return s;
}

StageLoss Stage2Total(const LossTerms& terms, const LossWeights& w, int q,
                      double beta) {
  if (!(beta >= 0.0) || beta > w.beta_max) {
    throw DomainError("realism weight outside [0, beta_max]");
  }
  StageLoss s = RateDistortion(terms, w, q);
  if (beta != 0.0) {
    torch::Tensor realism = w.perceptual * terms.perceptual;
    if (terms.adversarial.defined()) {
      realism = realism + w.adversarial * terms.adversarial;
    }
    s.total = s.total + beta * realism;
  }
  s.breakdown.total = Value(s.total);
  return s;
}

GeneratorAdversarial ComputeGeneratorAdversarial(AdvKind kind,
                                                 const torch::Tensor& x, int q,
                                                 double beta, NicModel& model,
                                                 Discriminator& disc,
                                                 const NicOutput& out) {
  GeneratorAdversarial g;
  g.fake_scores = disc(out.x_hat, q);
  switch (kind) {
    case AdvKind::kSgan:
      break;
    case AdvKind::kRgan:
    case AdvKind::kRagan:
      g.reference_scores = disc(x, q);
      g.reference_is_original = true;
      break;
    case AdvKind::kHrrgan: {
      const int top = model->config().num_levels - 1;
      if (q < top) {
        torch::Tensor higher;
        {
          torch::NoGradGuard no_grad;
          higher = model->Forward(x, q + 1, beta).x_hat;
        }
        g.extra_forwards = 1;
        // Scores of the higher level come from the same level-specific path
        // as the reconstruction being judged.
        g.reference_scores = disc(higher, q).detach();
      } else {
        g.reference_scores = disc(x, q).detach();
        g.reference_is_original = true;
      }
      break;
    }
  }
  g.loss = AdvGeneratorLoss(kind, g.fake_scores, g.reference_scores);
  return g;
}

torch::Tensor ComputeDiscriminatorAdversarial(AdvKind kind,
                                              const torch::Tensor& x,
                                              const torch::Tensor& x_hat, int q,
                                              Discriminator& disc) {
  return AdvDiscriminatorLoss(kind, disc(x, q), disc(x_hat.detach(), q));
}

HrrganResult HrrganPair(const torch::Tensor& x, int q, double beta,
                        NicModel& model, Discriminator& disc) {
  HrrganResult r;
  const auto before = model->forward_count();
  r.output = model->Forward(x, q, beta);
  const GeneratorAdversarial g =
      ComputeGeneratorAdversarial(AdvKind::kHrrgan, x, q, beta, model, disc, r.output);
  r.generator_loss = g.loss;
  r.reference_is_original = g.reference_is_original;
  r.discriminator_loss =
      ComputeDiscriminatorAdversarial(AdvKind::kHrrgan, x, r.output.x_hat, q, disc);
  r.nic_forwards = static_cast<int>(model->forward_count() - before);
  return r;
}

}  // namespace crdr
