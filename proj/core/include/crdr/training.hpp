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

#ifndef CRDR_TRAINING_HPP_
#define CRDR_TRAINING_HPP_

// Two-stage optimisation: rate-distortion-perceptual pretraining followed by
// adversarial fine-tuning with alternating generator/discriminator updates.

#include <torch/torch.h>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "crdr/checkpoint.hpp"
#include "crdr/config.hpp"
#include "crdr/discriminator.hpp"
#include "crdr/losses.hpp"
#include "crdr/model.hpp"
#include "crdr/perceptual.hpp"

namespace crdr {

using Rng = std::mt19937_64;

// Uniform over {0, ..., num_levels - 1}.
int SampleQuality(Rng& rng, int num_levels);
// Uniform on [0, beta_max].
double SampleBeta(Rng& rng, double beta_max);
// Step decay: base before 80% of total, final afterwards.
double LearningRateAt(std::int64_t step, std::int64_t total, double base,
                      double final_lr);

struct TrainConfig {
  std::int64_t stage1_steps = 2'000'000;
  std::int64_t stage2_steps = 3'000'000;
  int batch_size = 8;
  int crop_size = 256;
  double base_lr = 1e-4;
  double final_lr = 1e-5;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_interval = 10'000;
  std::string corpus;
  std::string output_dir = ".";
  std::string perceptual_weights;  // empty: seeded random feature stack
  std::uint64_t perceptual_seed = kDefaultPerceptualSeed;
  int threads = 0;                 // 0 keeps the torch default
  ModelConfig model;
  DiscriminatorConfig disc;
  AdvKind adv = AdvKind::kHrrgan;
  LossWeights weights;

  static TrainConfig FromConfig(const KeyValueConfig& kv);
  KeyValueConfig ToConfig() const;
  // Throws DomainError on inconsistent settings.
  void Validate() const;
};

// In-memory corpus of 8-bit images; batches are random crops with random
// horizontal flips.
class ImageCorpus {
 public:
  static ImageCorpus Load(const std::string& dir);
  explicit ImageCorpus(std::vector<torch::Tensor> images);

  std::size_t size() const { return images_.size(); }
  const torch::Tensor& image(std::size_t i) const { return images_[i]; }

  // (batch, 3, crop, crop) float tensor.
  torch::Tensor Sample(Rng& rng, int batch, int crop) const;

 private:
  std::vector<torch::Tensor> images_;  // (3, H, W) uint8
};

// Adaptive-moment optimizer (beta1 0.9, beta2 0.999, eps 1e-8) with state
// that round-trips through a TensorArchive.
class Adam {
 public:
  explicit Adam(std::vector<torch::Tensor> params);

  void ZeroGrad();
  void Step(double lr);
  void Save(TensorArchive& archive, const std::string& prefix) const;
  void Load(const TensorArchive& archive, const std::string& prefix);
  std::int64_t steps() const { return steps_; }

 private:
  std::vector<torch::Tensor> params_;
  std::vector<torch::Tensor> m_;
  std::vector<torch::Tensor> v_;
  std::int64_t steps_ = 0;
};

struct StepReport {
  std::int64_t step = 0;
  int stage = 1;
  int q = 0;
  double beta = 0.0;
  LossBreakdown loss;
  double bpp = 0.0;
  double d_loss = 0.0;
  double lr = 0.0;
  double d_lr = 0.0;
  int nic_forwards = 0;
  // Largest |grad| seen on discriminator parameters right after the
  // generator backward pass.
  double disc_grad_during_g = 0.0;

  static std::string CsvHeader();
  std::string ToCsv() const;
};

// Forces the sampled (q, beta) of one step; used by tests.
struct StepOverride {
  std::optional<int> q;
  std::optional<double> beta;
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, std::shared_ptr<const ImageCorpus> corpus);

  const TrainConfig& config() const { return cfg_; }
  NicModel& model() { return model_; }
  // Null during stage 1.
  Discriminator& disc() { return disc_; }
  PerceptualMetric& metric() { return *metric_; }
  std::int64_t step() const { return step_; }
  std::int64_t total_steps() const { return cfg_.stage1_steps + cfg_.stage2_steps; }

  StepReport TrainStepStage1(const torch::Tensor& batch, StepOverride o = {});
  StepReport TrainStepStage2(const torch::Tensor& batch, StepOverride o = {});

  // Runs the remaining steps. The callback sees every report; checkpoints are
  // written every checkpoint_interval steps and at the end.
  void Run(const std::function<void(const StepReport&)>& on_step = {},
           std::int64_t max_steps = -1);

  TensorArchive MakeCheckpoint() const;
  void SaveCheckpoint(const std::string& path) const;
  // Restores parameters, optimizer moments, RNG and step counter.
  void Resume(const TensorArchive& archive);

  // Creates the stage-2 discriminator (fresh weights from seed + 1).
  void StartStage2();

 private:
  StepReport Finish(StepReport r, const StageLoss& loss,
                    const torch::Tensor& rate) const;

  TrainConfig cfg_;
  std::shared_ptr<const ImageCorpus> corpus_;
  NicModel model_{nullptr};
  Discriminator disc_{nullptr};
  std::unique_ptr<PerceptualMetric> metric_;
  std::unique_ptr<Adam> opt_g_;
  std::unique_ptr<Adam> opt_d_;
  Rng rng_;
  std::int64_t step_ = 0;
};

// Builds the model recorded in a checkpoint.
NicModel LoadModel(const TensorArchive& archive);
// Null if the checkpoint holds no discriminator.
Discriminator LoadDiscriminator(const TensorArchive& archive);
// Perceptual metric configured in a checkpoint.
std::unique_ptr<PerceptualMetric> LoadMetric(const TensorArchive& archive);

}  // namespace crdr

#endif  // CRDR_TRAINING_HPP_
