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

#include "crdr/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "crdr/error.hpp"
#include "crdr/image_io.hpp"

namespace crdr {
namespace {

DiscriminatorConfig DiscConfigFrom(const KeyValueConfig& kv, int num_levels) {
  DiscriminatorConfig d;
  d.num_levels = num_levels;
  d.kind = ParseDesignKind(kv.GetString("design", ToString(d.kind)));
  const auto widths = kv.GetIntList("disc_widths", {64, 128, 256, 256});
  if (widths.size() != 4) throw DomainError("disc_widths needs 4 entries");
  for (std::size_t i = 0; i < 4; ++i) {
    if (widths[i] < 1) throw DomainError("disc_widths must be positive");
    d.widths[i] = static_cast<int>(widths[i]);
  }
  return d;
}

void SetRequiresGrad(torch::nn::Module& m, bool on) {
  for (auto& p : m.parameters()) p.set_requires_grad(on);
}

double MaxAbsGrad(const torch::nn::Module& m) {
  double best = 0.0;
  for (const auto& p : m.parameters()) {
    if (p.grad().defined()) {
      best = std::max(best, p.grad().abs().max().item<double>());
    }
  }
  return best;
}

std::string FormatCsv(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

int SampleQuality(Rng& rng, int num_levels) {
  if (num_levels < 1) throw DomainError("num_levels must be >= 1");
  return std::uniform_int_distribution<int>(0, num_levels - 1)(rng);
}

double SampleBeta(Rng& rng, double beta_max) {
  if (!(beta_max >= 0.0)) throw DomainError("beta_max must be nonnegative");
  if (beta_max == 0.0) return 0.0;
  return std::uniform_real_distribution<double>(0.0, beta_max)(rng);
}

double LearningRateAt(std::int64_t step, std::int64_t total, double base,
                      double final_lr) {
  // step < 0.8 * total, in integers.
  return step * 5 < total * 4 ? base : final_lr;
}

TrainConfig TrainConfig::FromConfig(const KeyValueConfig& kv) {
  TrainConfig c;
  c.stage1_steps = kv.GetInt("stage1_steps", c.stage1_steps);
  c.stage2_steps = kv.GetInt("stage2_steps", c.stage2_steps);
  c.batch_size = static_cast<int>(kv.GetInt("batch_size", c.batch_size));
  c.crop_size = static_cast<int>(kv.GetInt("crop_size", c.crop_size));
  c.base_lr = kv.GetDouble("base_lr", c.base_lr);
  c.final_lr = kv.GetDouble("final_lr", c.final_lr);
  c.seed = static_cast<std::uint64_t>(kv.GetInt("seed", 0));
  c.checkpoint_interval = kv.GetInt("checkpoint_interval", c.checkpoint_interval);
  c.corpus = kv.GetString("corpus", c.corpus);
  c.output_dir = kv.GetString("output_dir", c.output_dir);
  c.perceptual_weights = kv.GetString("perceptual_weights", "");
  c.perceptual_seed = static_cast<std::uint64_t>(
      kv.GetInt("perceptual_seed", static_cast<std::int64_t>(c.perceptual_seed)));
  c.threads = static_cast<int>(kv.GetInt("threads", c.threads));
  c.model = ModelConfig::FromConfig(kv);
  c.disc = DiscConfigFrom(kv, c.model.num_levels);
  c.adv = ParseAdvKind(kv.GetString("adv", ToString(c.adv)));
  c.weights = LossWeights::FromConfig(kv);
  c.Validate();
  return c;
}

KeyValueConfig TrainConfig::ToConfig() const {
  KeyValueConfig kv;
  kv.Set("stage1_steps", std::to_string(stage1_steps));
  kv.Set("stage2_steps", std::to_string(stage2_steps));
  kv.Set("batch_size", std::to_string(batch_size));
  kv.Set("crop_size", std::to_string(crop_size));
  kv.Set("base_lr", FormatDouble(base_lr));
  kv.Set("final_lr", FormatDouble(final_lr));
  kv.Set("seed", std::to_string(seed));
  kv.Set("checkpoint_interval", std::to_string(checkpoint_interval));
  kv.Set("corpus", corpus);
  kv.Set("output_dir", output_dir);
  kv.Set("perceptual_weights", perceptual_weights);
  kv.Set("perceptual_seed", std::to_string(perceptual_seed));
  kv.Set("threads", std::to_string(threads));
  model.WriteTo(kv);
  kv.Set("design", ToString(disc.kind));
  kv.Set("disc_widths", JoinInts({disc.widths[0], disc.widths[1], disc.widths[2],
                                  disc.widths[3]}));
  kv.Set("adv", ToString(adv));
  weights.WriteTo(kv);
  return kv;
}

void TrainConfig::Validate() const {
  if (stage1_steps <= 0 || stage2_steps <= 0) {
    throw DomainError("stage step counts must be positive");
  }
  if (model.num_levels < 2) throw DomainError("training needs Q >= 2");
  if (static_cast<int>(weights.rate.size()) != model.num_levels) {
    throw DomainError("lambda_r needs exactly Q = " +
                      std::to_string(model.num_levels) + " entries");
  }
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (crop_size < kPadMultiple || crop_size % kPadMultiple != 0) {
    throw DomainError("crop_size must be a positive multiple of 64");
  }
  if (!(base_lr > 0.0) || !(final_lr > 0.0)) {
    throw DomainError("learning rates must be positive");
  }
  if (weights.beta_max != model.beta_max) {
    throw DomainError("beta_max differs between model and loss weights");
  }
  weights.Validate();
}

ImageCorpus ImageCorpus::Load(const std::string& dir) {
  std::vector<torch::Tensor> images;
  for (const std::string& path : ListPngs(dir)) {
    const RgbImage img = ReadPng(path);
    auto t = torch::from_blob(const_cast<std::uint8_t*>(img.pixels.data()),
                              {img.height, img.width, 3}, torch::kUInt8)
                 .permute({2, 0, 1})
                 .contiguous();
    images.push_back(t.clone());
  }
  if (images.empty()) throw FormatError("no PNG images in " + dir);
  return ImageCorpus(std::move(images));
}

ImageCorpus::ImageCorpus(std::vector<torch::Tensor> images)
    : images_(std::move(images)) {}

torch::Tensor ImageCorpus::Sample(Rng& rng, int batch, int crop) const {
  if (images_.empty()) throw DomainError("empty corpus");
  std::vector<torch::Tensor> crops;
  crops.reserve(static_cast<std::size_t>(batch));
  std::uniform_int_distribution<std::size_t> pick(0, images_.size() - 1);
  for (int b = 0; b < batch; ++b) {
    auto img = images_[pick(rng)].to(torch::kFloat).unsqueeze(0);
    const auto h = img.size(2);
    const auto w = img.size(3);
    if (h < crop || w < crop) {
      namespace F = torch::nn::functional;
      img = F::pad(img, F::PadFuncOptions({0, std::max<std::int64_t>(0, crop - w), 0,
                                           std::max<std::int64_t>(0, crop - h)})
                            .mode(torch::kReplicate));
    }
    const auto top = std::uniform_int_distribution<std::int64_t>(0, img.size(2) - crop)(rng);
    const auto left = std::uniform_int_distribution<std::int64_t>(0, img.size(3) - crop)(rng);
    auto patch = img.slice(2, top, top + crop).slice(3, left, left + crop);
    if (rng() & 1u) patch = patch.flip({3});
    crops.push_back(patch);
  }
  return torch::cat(crops, 0).div(255.0).contiguous();
}

Adam::Adam(std::vector<torch::Tensor> params) : params_(std::move(params)) {
  for (const auto& p : params_) {
    m_.push_back(torch::zeros_like(p));
    v_.push_back(torch::zeros_like(p));
  }
}

void Adam::ZeroGrad() {
  for (auto& p : params_) p.mutable_grad().reset();
}

void Adam::Step(double lr) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  torch::NoGradGuard no_grad;
  ++steps_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& g = params_[i].grad();
    if (!g.defined()) continue;
    m_[i].mul_(kBeta1).add_(g, 1.0 - kBeta1);
    v_[i].mul_(kBeta2).addcmul_(g, g, 1.0 - kBeta2);
    const auto denom = (v_[i] / c2).sqrt_().add_(kEps);
    params_[i].addcdiv_(m_[i], denom, -lr / c1);
  }
}

void Adam::Save(TensorArchive& archive, const std::string& prefix) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    archive.arrays[prefix + "m." + std::to_string(i)] = m_[i].clone();
    archive.arrays[prefix + "v." + std::to_string(i)] = v_[i].clone();
  }
  archive.state.Set(prefix + "steps", std::to_string(steps_));
}

void Adam::Load(const TensorArchive& archive, const std::string& prefix) {
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    for (auto* slot : {&m_, &v_}) {
      const std::string name =
          prefix + (slot == &m_ ? "m." : "v.") + std::to_string(i);
      const auto it = archive.arrays.find(name);
      if (it == archive.arrays.end()) {
        throw FormatError("checkpoint is missing optimizer state " + name);
      }
      if (it->second.sizes() != (*slot)[i].sizes()) {
        throw CompatibilityError("optimizer state " + name + " has a bad shape");
      }
      (*slot)[i].copy_(it->second);
    }
  }
  steps_ = archive.state.GetInt(prefix + "steps", 0);
}

std::string StepReport::CsvHeader() {
  return "step,stage,q,beta,rate_bpp,distortion,perceptual,adversarial,total,"
         "d_loss,lr,d_lr";
}

std::string StepReport::ToCsv() const {
  return std::to_string(step) + "," + std::to_string(stage) + "," +
         std::to_string(q) + "," + FormatCsv(beta) + "," + FormatCsv(bpp) + "," +
         FormatCsv(loss.distortion) + "," + FormatCsv(loss.perceptual) + "," +
         FormatCsv(loss.adversarial) + "," + FormatCsv(loss.total) + "," +
         FormatCsv(d_loss) + "," + FormatCsv(lr) + "," + FormatCsv(d_lr);
}

Trainer::Trainer(TrainConfig cfg, std::shared_ptr<const ImageCorpus> corpus)
    : cfg_(std::move(cfg)), corpus_(std::move(corpus)) {
  cfg_.Validate();
  if (cfg_.threads > 0) torch::set_num_threads(cfg_.threads);
  torch::manual_seed(cfg_.seed);
  model_ = NicModel(cfg_.model);
  metric_ = cfg_.perceptual_weights.empty()
                ? FeatureStackMetric::FromSeed(cfg_.perceptual_seed)
                : FeatureStackMetric::FromFile(cfg_.perceptual_weights);
  opt_g_ = std::make_unique<Adam>(model_->parameters());
  rng_.seed(cfg_.seed);
}

void Trainer::StartStage2() {
  if (disc_) return;
  torch::manual_seed(cfg_.seed + 1);
  disc_ = Discriminator(cfg_.disc);
  opt_d_ = std::make_unique<Adam>(disc_->parameters());
}

StepReport Trainer::Finish(StepReport r, const StageLoss& loss,
                           const torch::Tensor& rate) const {
  r.loss = loss.breakdown;
  r.bpp = rate.item<double>();
  if (!std::isfinite(r.loss.total)) {
    throw NumericError("training loss became non-finite at step " +
                       std::to_string(r.step));
  }
  return r;
}

StepReport Trainer::TrainStepStage1(const torch::Tensor& batch, StepOverride o) {
  StepReport r;
  r.step = step_;
  r.stage = 1;
  r.beta = o.beta ? *o.beta : SampleBeta(rng_, cfg_.model.beta_max);
  r.q = o.q ? *o.q : SampleQuality(rng_, cfg_.model.num_levels);
  r.lr = LearningRateAt(step_, total_steps(), cfg_.base_lr, cfg_.final_lr);

  model_->train();
  opt_g_->ZeroGrad();
  const NicOutput out = model_->Forward(batch, r.q, r.beta);
  r.nic_forwards = 1;
  LossTerms terms;
  terms.rate = NicModelImpl::RateBpp(out.likelihoods, batch.size(2), batch.size(3));
  terms.distortion = UnitMse(batch, out.x_hat);
  terms.perceptual = Perceptual(batch, out.x_hat, *metric_);
  const StageLoss loss = Stage1Total(terms, cfg_.weights, r.q);
  loss.total.backward();
  opt_g_->Step(r.lr);
  ++step_;
  return Finish(r, loss, terms.rate);
}

StepReport Trainer::TrainStepStage2(const torch::Tensor& batch, StepOverride o) {
  StartStage2();
  StepReport r;
  r.step = step_;
  r.stage = 2;
  r.beta = o.beta ? *o.beta : SampleBeta(rng_, cfg_.model.beta_max);
  r.q = o.q ? *o.q : SampleQuality(rng_, cfg_.model.num_levels);
  // G follows the global schedule; the schedule for D restarts at stage 2.
  r.lr = LearningRateAt(step_, total_steps(), cfg_.base_lr, cfg_.final_lr);
  const std::int64_t local = std::max<std::int64_t>(0, step_ - cfg_.stage1_steps);
  r.d_lr = LearningRateAt(local, cfg_.stage2_steps, cfg_.base_lr, cfg_.final_lr);

  model_->train();
  disc_->train();

  // Generator update with the discriminator frozen.
  SetRequiresGrad(*disc_, false);
  opt_g_->ZeroGrad();
  opt_d_->ZeroGrad();
  const auto before = model_->forward_count();
  const NicOutput out = model_->Forward(batch, r.q, r.beta);
  const GeneratorAdversarial g =
      ComputeGeneratorAdversarial(cfg_.adv, batch, r.q, r.beta, model_, disc_, out);
  r.nic_forwards = static_cast<int>(model_->forward_count() - before);
  LossTerms terms;
  terms.rate = NicModelImpl::RateBpp(out.likelihoods, batch.size(2), batch.size(3));
  terms.distortion = UnitMse(batch, out.x_hat);
  terms.perceptual = Perceptual(batch, out.x_hat, *metric_);
  terms.adversarial = g.loss;
  const StageLoss loss = Stage2Total(terms, cfg_.weights, r.q, r.beta);
  loss.total.backward();
  r.disc_grad_during_g = MaxAbsGrad(*disc_);
  opt_g_->Step(r.lr);

  // Discriminator update on the same batch, q and beta.
  SetRequiresGrad(*disc_, true);
  opt_d_->ZeroGrad();
  const auto d_loss =
      ComputeDiscriminatorAdversarial(cfg_.adv, batch, out.x_hat, r.q, disc_);
  d_loss.backward();
  opt_d_->Step(r.d_lr);
  r.d_loss = d_loss.item<double>();
  ++step_;
  return Finish(r, loss, terms.rate);
}

void Trainer::Run(const std::function<void(const StepReport&)>& on_step,
                  std::int64_t max_steps) {
  if (!corpus_) throw DomainError("training needs a corpus");
  std::filesystem::create_directories(cfg_.output_dir);
  std::int64_t done = 0;
  while (step_ < total_steps() && (max_steps < 0 || done < max_steps)) {
    const torch::Tensor batch = corpus_->Sample(rng_, cfg_.batch_size, cfg_.crop_size);
    const StepReport r = step_ < cfg_.stage1_steps ? TrainStepStage1(batch)
                                                   : TrainStepStage2(batch);
    if (on_step) on_step(r);
    ++done;
    if (cfg_.checkpoint_interval > 0 && step_ % cfg_.checkpoint_interval == 0 &&
        step_ < total_steps()) {
      SaveCheckpoint((std::filesystem::path(cfg_.output_dir) / "last.ckpt").string());
    }
  }
  if (step_ == total_steps()) {
    SaveCheckpoint((std::filesystem::path(cfg_.output_dir) / "model.ckpt").string());
  }
}

TensorArchive Trainer::MakeCheckpoint() const {
  TensorArchive a;
  a.config = cfg_.ToConfig();
  std::ostringstream rng_state;
  rng_state << rng_;
  a.state.Set("step", std::to_string(step_));
  a.state.Set("rng", rng_state.str());
  a.state.Set("has_disc", disc_ ? "1" : "0");
  StoreParameters(*model_, a, "model.");
  opt_g_->Save(a, "adam_g.");
  if (disc_) {
    StoreParameters(*disc_, a, "disc.");
    opt_d_->Save(a, "adam_d.");
  }
  return a;
}

void Trainer::SaveCheckpoint(const std::string& path) const {
  MakeCheckpoint().Save(path);
}

void Trainer::Resume(const TensorArchive& a) {
  LoadParameters(*model_, a, "model.");
  opt_g_->Load(a, "adam_g.");
  if (a.state.GetInt("has_disc", 0) != 0) {
    StartStage2();
    LoadParameters(*disc_, a, "disc.");
    opt_d_->Load(a, "adam_d.");
  }
  std::istringstream rng_state(a.state.GetString("rng", ""));
  rng_state >> rng_;
  if (!rng_state) throw FormatError("checkpoint has no valid RNG state");
  step_ = a.state.GetInt("step", 0);
}

NicModel LoadModel(const TensorArchive& archive) {
  NicModel model(ModelConfig::FromConfig(archive.config));
  LoadParameters(*model, archive, "model.");
  model->eval();
  return model;
}

Discriminator LoadDiscriminator(const TensorArchive& archive) {
  if (archive.state.GetInt("has_disc", 0) == 0) return Discriminator(nullptr);
  const ModelConfig m = ModelConfig::FromConfig(archive.config);
  Discriminator disc(DiscConfigFrom(archive.config, m.num_levels));
  LoadParameters(*disc, archive, "disc.");
  disc->eval();
  return disc;
}

std::unique_ptr<PerceptualMetric> LoadMetric(const TensorArchive& archive) {
  const std::string weights = archive.config.GetString("perceptual_weights", "");
  if (!weights.empty()) return FeatureStackMetric::FromFile(weights);
  return FeatureStackMetric::FromSeed(static_cast<std::uint64_t>(
      archive.config.GetInt("perceptual_seed",
                            static_cast<std::int64_t>(kDefaultPerceptualSeed))));
}

}  // namespace crdr
