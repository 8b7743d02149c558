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

// Acceptance suite. Prints one PASS/FAIL line per selected criterion and
// exits non-zero if any of them fails.

#include <torch/torch.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../gradcheck.hpp"
#include "../loss_oracle.hpp"
#include "crdr/codec.hpp"
#include "crdr/entropy.hpp"
#include "crdr/error.hpp"
#include "crdr/evaluation.hpp"
#include "crdr/image_io.hpp"
#include "crdr/perceptual.hpp"
#include "crdr/range_coder.hpp"
#include "crdr/synthetic.hpp"
#include "crdr/training.hpp"

namespace crdr::acceptance {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Context {
  fs::path work_dir;
  std::string config;
};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed check without stopping the criterion.
  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double RelErr(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// Small untrained model for the structural criteria.
NicModel TinyModel(int levels, std::uint64_t seed) {
  torch::manual_seed(seed);
  ModelConfig c;
  c.num_levels = levels;
  c.channels = 8;
  c.latent_channels = 4;
  c.film_hidden = 8;
  c.beta_bands = 4;
  NicModel m(c);
  m->eval();
  return m;
}

DiscriminatorConfig TinyDisc(DesignKind kind, int levels) {
  DiscriminatorConfig d;
  d.kind = kind;
  d.num_levels = levels;
  d.widths = {8, 16, 16, 16};
  return d;
}

// 1. Adversarial losses against a scalar oracle.
void LossOracle(const Context&, Outcome& o) {
  const auto start = Clock::now();
  torch::manual_seed(101);
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> batch(1, 4), side(1, 8);
  const double scales[] = {0.1, 1.0, 3.0};
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::vector<std::int64_t> shape = {batch(rng), 1, side(rng), side(rng)};
    const double s = scales[t % 3];
    const auto f = torch::randn(shape, torch::kDouble) * s;
    const auto r = torch::randn(shape, torch::kDouble) * s;
    const auto fv = testing::Values(f), rv = testing::Values(r);
    for (auto k : kAllAdvKinds) {
      worst = std::max(worst, RelErr(AdvGeneratorLoss(k, f, r).item<double>(),
                                     testing::OracleGenerator(k, fv, rv)));
      worst = std::max(worst, RelErr(AdvDiscriminatorLoss(k, r, f).item<double>(),
                                     testing::OracleDiscriminator(k, rv, fv)));
    }
  }
  o.Require(worst <= 1e-9, "oracle relative error <= 1e-9");

  double ln2_gap = 0.0;
  for (std::int64_t n : {1, 7, 64}) {
    const auto sc = torch::randn({1, 1, n, n}, torch::kDouble);
    ln2_gap = std::max(ln2_gap, std::abs(AdvGeneratorLoss(AdvKind::kHrrgan, sc, sc.clone())
                                             .item<double>() -
                                         std::numbers::ln2));
  }
  o.Require(ln2_gap == 0.0, "HRRGAN equal scores == ln 2");

  double ragan_gap = 0.0;
  std::normal_distribution<double> n(0.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    const auto f = torch::full({1, 1, 1, 1}, n(rng), torch::kDouble);
    const auto r = torch::full({1, 1, 1, 1}, n(rng), torch::kDouble);
    ragan_gap = std::max(ragan_gap,
                         std::abs(AdvGeneratorLoss(AdvKind::kRagan, f, r).item<double>() -
                                  2.0 * AdvGeneratorLoss(AdvKind::kRgan, f, r).item<double>()));
  }
  o.Require(ragan_gap <= 1e-12, "RaGAN single sample == 2 x RGAN within 1e-12");
  const double secs = Seconds(start);
  o.Require(secs < 60.0, "runtime < 1 min");
  o.detail << "1000 maps x 4 kinds x 2 sides, max rel err " << worst << ", |HRRGAN - ln2| "
           << ln2_gap << ", |RaGAN - 2 RGAN| " << ragan_gap << ", " << secs << " s";
}

// 2. Finite-difference gradient checks.
void GradientChecks(const Context&, Outcome& o) {
  const auto start = Clock::now();
  constexpr int kProbes = 100;
  std::map<std::string, double> err;
  err["ica"] = testing::IcaGradCheck(kProbes, 201);
  err["beta_path"] = testing::BetaPathGradCheck(kProbes, 202);
  err["ste"] = testing::SteGradCheck(kProbes, 203);
  for (auto k : kAllAdvKinds) err[ToString(k)] = testing::AdvLossGradCheck(k, kProbes, 204);
  for (const auto& [name, e] : err) {
    o.Require(e < 1e-4, name + " max relative error < 1e-4");
    o.detail << name << " " << e << ", ";
  }
  const double secs = Seconds(start);
  o.Require(secs < 300.0, "runtime < 5 min");
  o.detail << kProbes << " probes each, h=1e-5, " << secs << " s";
}

CdfTable RandomTable(std::mt19937_64& rng) {
  const DensityFamily families[] = {DensityFamily::kLogistic, DensityFamily::kNormal,
                                    DensityFamily::kUniform};
  std::uniform_real_distribution<double> loc(-20.0, 20.0), log_scale(-3.0, 4.0);
  const ChannelDensity d{loc(rng), std::exp(log_scale(rng))};
  return BuildCdf(families[rng() % 3], d);
}

// Draws symbols from the table's own distribution; a fraction of streams
// uses uniform symbols over the support instead.
std::vector<std::int32_t> RandomSymbols(std::mt19937_64& rng, const CdfTable& t,
                                        std::size_t n, bool uniform) {
  std::vector<std::int32_t> s(n);
  std::uniform_int_distribution<std::uint32_t> target(0, kCdfTotal - 1);
  std::uniform_int_distribution<std::int32_t> any(t.bounds.min, t.bounds.max);
  for (auto& v : s) v = uniform ? any(rng) : t.Lookup(target(rng));
  return s;
}

// 3. Range coder round trips and rate-model consistency.
void EntropyCoder(const Context&, Outcome& o) {
  const auto start = Clock::now();
  std::mt19937_64 rng(301);
  std::uniform_int_distribution<std::size_t> short_len(0, 200), long_len(4096, 12000);
  int failures = 0, long_streams = 0, size_misses = 0;
  double worst_excess = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const CdfTable table = RandomTable(rng);
    const bool is_long = t % 100 == 0;
    const std::size_t n = is_long ? long_len(rng) : short_len(rng);
    const auto symbols = RandomSymbols(rng, table, n, t % 7 == 0);
    const auto bytes = RangeEncode(symbols, table);
    if (RangeDecode(bytes, table, n) != symbols) ++failures;
    if (n >= 4096) {
      ++long_streams;
      double bits = 0.0;
      for (auto s : symbols) bits += table.Bits(s);
      const double estimate = bits / 8.0;
      const double gap = std::abs(static_cast<double>(bytes.size()) - estimate);
      const double allowed = 0.01 * estimate + 32.0;
      worst_excess = std::max(worst_excess, gap / allowed);
      if (gap > allowed) ++size_misses;
    }
  }
  // Multi-channel latents through the per-channel interface.
  for (int t = 0; t < 200; ++t) {
    QuantizedLatent latent;
    latent.channels = 1 + static_cast<std::int64_t>(rng() % 6);
    latent.height = 1 + static_cast<std::int64_t>(rng() % 9);
    latent.width = 1 + static_cast<std::int64_t>(rng() % 9);
    std::vector<CdfTable> tables;
    for (std::int64_t c = 0; c < latent.channels; ++c) {
      tables.push_back(RandomTable(rng));
      const auto s = RandomSymbols(rng, tables.back(),
                                   static_cast<std::size_t>(latent.plane_size()), false);
      latent.values.insert(latent.values.end(), s.begin(), s.end());
    }
    const auto bytes = RangeEncode(latent, tables);
    if (!(RangeDecode(bytes, tables, latent.height, latent.width) == latent)) ++failures;
  }
  o.Require(failures == 0, "lossless round trips");
  o.Require(size_misses == 0, "coded size within 1% + 32 bytes of the estimate");
  const double secs = Seconds(start);
  o.Require(secs < 300.0, "runtime < 5 min");
  o.detail << "100000 + 200 round trips, " << failures << " mismatches; " << long_streams
           << " streams >= 4096 symbols, worst gap " << worst_excess
           << " of the allowance; " << secs << " s";
}

// 4. Container header, dimension fidelity and fuzzing.
void BitstreamChecks(const Context&, Outcome& o) {
  const std::uint16_t u16[] = {1, 2, 255, 256, 32767, 32768, 65534, 65535};
  const std::uint8_t u8[] = {0, 1, 127, 128, 254, 255};
  const std::uint32_t u32[] = {0u, 1u, 255u, 65536u, 0x7FFFFFFFu, 0x80000000u, 0xFFFFFFFFu};
  std::int64_t headers = 0, header_failures = 0;
  for (auto h : u16) {
    for (auto w : u16) {
      for (auto level : u8) {
        for (auto frac : u8) {
          for (auto ch : {std::uint16_t{0}, std::uint16_t{1}, std::uint16_t{320},
                          std::uint16_t{65535}}) {
            for (auto payload : u32) {
              const StreamHeader hdr{h, w, level, frac, ch, payload};
              ++headers;
              if (!(ParseHeader(SerializeHeader(hdr)) == hdr)) ++header_failures;
            }
          }
        }
      }
    }
  }
  o.Require(header_failures == 0, "header round trip");

  NicModel model = TinyModel(3, 401);
  std::mt19937_64 rng(402);
  std::uniform_int_distribution<std::int64_t> side(1, 513);
  std::uniform_real_distribution<double> qd(0.0, 2.0), bd(0.0, kDefaultBetaMax);
  int dim_failures = 0;
  std::vector<std::vector<std::uint8_t>> streams;
  for (int i = 0; i < 50; ++i) {
    const std::int64_t h = side(rng), w = side(rng);
    const auto x = ToTensor(SyntheticImage(rng, h, w));
    const auto qc = QualityControl::FromFloat(qd(rng), 3);
    const auto bytes = Compress(x, qc, model).Serialize();
    const auto y = Decompress(Bitstream::Parse(bytes), RealismWeight(bd(rng)), model);
    if (y.size(2) != h || y.size(3) != w || y.size(1) != 3) ++dim_failures;
    if (streams.size() < 8 && h * w < 200 * 200) streams.push_back(bytes);
  }
  o.Require(dim_failures == 0, "decoded dimensions equal the input");

  int clean_errors = 0, decoded = 0, crashes = 0;
  for (int m = 0; m < 1000; ++m) {
    auto bytes = streams[static_cast<std::size_t>(m) % streams.size()];
    switch (m % 6) {
      case 0:  // bit flip
        bytes[rng() % bytes.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        break;
      case 1:  // random byte
        bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
        break;
      case 2:  // truncation
        bytes.resize(rng() % bytes.size());
        break;
      case 3:  // trailing garbage
        for (int k = 1 + static_cast<int>(rng() % 16); k > 0; --k) {
          bytes.push_back(static_cast<std::uint8_t>(rng()));
        }
        break;
      case 4:  // header byte
        bytes[rng() % kHeaderBytes] = static_cast<std::uint8_t>(rng());
        break;
      default:  // several payload bytes
        for (int k = 0; k < 4; ++k) {
          const auto pos = kHeaderBytes + rng() % (bytes.size() - kHeaderBytes);
          bytes[pos] = static_cast<std::uint8_t>(rng());
        }
        break;
    }
    try {
      const auto y = Decompress(Bitstream::Parse(bytes), RealismWeight(1.0), model);
      ++decoded;
    } catch (const Error&) {
      ++clean_errors;
    } catch (...) {
      ++crashes;
    }
  }
  o.Require(crashes == 0, "fuzzed streams only raise library errors");
  o.detail << headers << " headers, 50 images 1-513 px, 1000 mutations: " << clean_errors
           << " clean errors, " << decoded << " decoded, " << crashes << " other failures";
}

bool RowIsZero(const torch::Tensor& grad, std::int64_t row) {
  return !grad.defined() || grad[row].abs().max().item<double>() == 0.0;
}

// Gradient state of the level-`row` scaling vectors after a backward pass:
// true when every ICA layer has exactly zero gradient in that row.
bool LevelRowsZero(NicModel& model, std::int64_t row) {
  bool zero = true;
  for (const auto& item : model->named_parameters()) {
    if (item.key().ends_with("log_scales")) {
      zero = zero && RowIsZero(item.value().grad(), row);
    }
  }
  return zero;
}

// 5. Higher-rate relativistic loss semantics.
void AlgorithmSemantics(const Context&, Outcome& o) {
  const int levels = 3;
  NicModel model = TinyModel(levels, 501);
  model->train();
  torch::manual_seed(502);
  Discriminator disc(TinyDisc(DesignKind::kIndependent, levels));
  const auto x = torch::rand({2, 3, 64, 64});
  const double beta = 2.0;

  // Top level: one forward, reference is D(x).
  {
    model->zero_grad();
    model->reset_forward_count();
    const auto out = model->Forward(x, levels - 1, beta);
    const auto g = ComputeGeneratorAdversarial(AdvKind::kHrrgan, x, levels - 1, beta, model,
                                               disc, out);
    o.Require(model->forward_count() == 1, "q=Q-1 uses one forward");
    o.Require(g.reference_is_original, "q=Q-1 reference is the original");
    o.Require(torch::equal(g.reference_scores, disc(x, levels - 1).detach()),
              "q=Q-1 reference scores equal D(x)");
  }
  // Lower levels: two forwards, no gradient through the q+1 branch.
  for (int q = 0; q < levels - 1; ++q) {
    model->zero_grad();
    disc->zero_grad();
    const auto r = HrrganPair(x, q, beta, model, disc);
    o.Require(r.nic_forwards == 2, "q<Q-1 uses exactly two forwards");
    o.Require(!r.reference_is_original, "q<Q-1 reference is the higher level");
    r.generator_loss.backward();
    o.Require(LevelRowsZero(model, q + 1), "q+1 scaling rows receive zero gradient");
    o.Require(!LevelRowsZero(model, q), "level q scaling rows receive gradient");

    // Control: the same probe sees gradient when the reference is not
    // detached, so a zero above is meaningful.
    model->zero_grad();
    const auto low = model->Forward(x, q, beta).x_hat;
    const auto high = model->Forward(x, q + 1, beta).x_hat;
    AdvGeneratorLoss(AdvKind::kRgan, disc(low, q), disc(high, q)).backward();
    o.Require(!LevelRowsZero(model, q + 1), "probe control sees q+1 gradient");
  }
  o.detail << "Q=3: q=2 one forward with D(x) reference; q=0,1 two forwards, "
              "zero gradient on level q+1 scaling vectors";
}

// 7. Discriminator zoo contract.
void ZooContract(const Context&, Outcome& o) {
  const int levels = 4;
  torch::manual_seed(701);
  for (auto kind : kAllDesigns) {
    Discriminator d(TinyDisc(kind, levels));
    for (auto [h, w] : {std::pair<int, int>{16, 16}, {64, 48}, {96, 32}}) {
      const auto s = d(torch::rand({2, 3, h, w}), levels - 1);
      o.Require(s.size(0) == 2 && s.size(1) == 1 && s.size(2) == h / 16 && s.size(3) == w / 16,
                ToString(kind) + " map is H/16 x W/16");
    }
  }
  Discriminator indep(TinyDisc(DesignKind::kIndependent, levels));
  const auto x = torch::rand({2, 3, 32, 32});
  for (int q = 0; q < levels; ++q) {
    indep->zero_grad();
    indep(x, q).square().sum().backward();
    for (int j = 0; j < levels; ++j) {
      for (const auto& p : indep->LevelParameters(j)) {
        const bool zero = !p.grad().defined() || p.grad().abs().max().item<double>() == 0.0;
        o.Require(zero == (j != q), "independent gradient isolation");
      }
    }
  }
  Discriminator no_cond(TinyDisc(DesignKind::kSharedNoCond, levels));
  const auto ref = no_cond(x, 0);
  for (int q = 1; q < levels; ++q) {
    o.Require(torch::equal(no_cond(x, q), ref), "shared_no_cond is q-invariant");
  }
  o.detail << "5 designs x 3 sizes; independent isolation over " << levels
           << " levels; shared_no_cond bit-identical across q";
}

// Trained desk-scale model, reused when present with a matching config.
struct DeskRun {
  TensorArchive archive;
  std::vector<torch::Tensor> heldout;
  std::string note;
};

KeyValueConfig ComparableConfig(KeyValueConfig kv) {
  KeyValueConfig out;
  for (const auto& [k, v] : kv.values()) {
    if (k != "corpus" && k != "output_dir" && k != "threads") out.Set(k, v);
  }
  return out;
}

std::vector<std::string> ListPngsOrEmpty(const fs::path& dir) {
  return fs::is_directory(dir) ? ListPngs(dir.string()) : std::vector<std::string>{};
}

std::vector<torch::Tensor> LoadImages(const fs::path& dir) {
  std::vector<torch::Tensor> images;
  for (const auto& p : ListPngs(dir.string())) images.push_back(ToTensor(ReadPng(p)));
  return images;
}

DeskRun& Desk(const Context& ctx) {
  static std::unique_ptr<DeskRun> run;
  if (run) return *run;
  run = std::make_unique<DeskRun>();
  const fs::path train_dir = ctx.work_dir / "train";
  const fs::path heldout_dir = ctx.work_dir / "heldout";
  const fs::path out_dir = ctx.work_dir / "run";
  if (ListPngsOrEmpty(train_dir).size() < 2048) {
    WriteSyntheticCorpus(train_dir.string(), 2048, 96, 1);
  }
  if (ListPngsOrEmpty(heldout_dir).size() < 50) {
    WriteSyntheticCorpus(heldout_dir.string(), 50, 96, 2);
  }
  KeyValueConfig kv = KeyValueConfig::Load(ctx.config);
  kv.Set("corpus", train_dir.string());
  kv.Set("output_dir", out_dir.string());
  const TrainConfig cfg = TrainConfig::FromConfig(kv);
  const std::string expected = ComparableConfig(cfg.ToConfig()).ToText();

  const fs::path model_path = out_dir / "model.ckpt";
  bool reuse = false;
  if (fs::exists(model_path)) {
    run->archive = TensorArchive::Load(model_path.string());
    reuse = ComparableConfig(run->archive.config).ToText() == expected &&
            run->archive.state.GetInt("step", 0) == cfg.stage1_steps + cfg.stage2_steps;
  }
  if (reuse) {
    run->note = "reused " + model_path.string();
  } else {
    auto corpus = std::make_shared<const ImageCorpus>(ImageCorpus::Load(train_dir.string()));
    Trainer trainer(cfg, corpus);
    const fs::path last = out_dir / "last.ckpt";
    if (fs::exists(last)) {
      const auto a = TensorArchive::Load(last.string());
      if (ComparableConfig(a.config).ToText() == expected) trainer.Resume(a);
    }
    const auto start = Clock::now();
    trainer.Run([&](const StepReport& r) {
      if ((r.step + 1) % 500 == 0) {
        std::printf("  training step %lld/%lld stage %d loss %.4f bpp %.4f\n",
                    static_cast<long long>(r.step + 1),
                    static_cast<long long>(trainer.total_steps()), r.stage, r.loss.total, r.bpp);
        std::fflush(stdout);
      }
    });
    run->archive = trainer.MakeCheckpoint();
    run->note = "trained in " + std::to_string(static_cast<int>(Seconds(start))) + " s";
  }
  run->heldout = LoadImages(heldout_dir);
  return *run;
}

// 6. Rate and realism trends on the held-out set.
void TrainingTrend(const Context& ctx, Outcome& o) {
  DeskRun& run = Desk(ctx);
  NicModel model = LoadModel(run.archive);
  auto metric = LoadMetric(run.archive);
  const int levels = model->config().num_levels;
  const double beta_max = model->config().beta_max;
  std::vector<RdPoint> at0, atmax;
  for (int q = 0; q < levels; ++q) {
    at0.push_back(EvaluateImages(model, *metric, run.heldout, QualityControl(q, 0.0, levels),
                                 RealismWeight(0.0, beta_max)));
  }
  atmax.push_back(EvaluateImages(model, *metric, run.heldout, QualityControl(0, 0.0, levels),
                                 RealismWeight(beta_max, beta_max)));
  o.Require(run.heldout.size() == 50, "50 held-out images");
  for (int q = 0; q + 1 < levels; ++q) {
    const auto& a = at0[static_cast<std::size_t>(q)];
    const auto& b = at0[static_cast<std::size_t>(q) + 1];
    o.Require(b.bpp >= 1.10 * a.bpp, "bpp margin >= 10% between q=" + std::to_string(q) +
                                         " and q=" + std::to_string(q + 1));
    o.Require(b.psnr >= a.psnr + 0.5, "PSNR margin >= 0.5 dB between q=" +
                                          std::to_string(q) + " and q=" + std::to_string(q + 1));
  }
  o.Require(at0[0].psnr >= atmax[0].psnr, "q=0 PSNR(beta=0) >= PSNR(beta_max)");
  o.Require(atmax[0].perceptual <= at0[0].perceptual,
            "q=0 perceptual(beta_max) <= perceptual(beta=0)");
  o.detail << run.note << "; beta=0:";
  for (int q = 0; q < levels; ++q) {
    const auto& p = at0[static_cast<std::size_t>(q)];
    o.detail << " q" << q << " " << p.bpp << " bpp " << p.psnr << " dB " << p.perceptual;
  }
  o.detail << "; q0 beta_max: " << atmax[0].bpp << " bpp " << atmax[0].psnr << " dB "
           << atmax[0].perceptual;

  fs::create_directories(ctx.work_dir / "report");
  std::vector<RdPoint> rows = at0;
  rows.push_back(atmax[0]);
  WriteText((ctx.work_dir / "report" / "levels.csv").string(), SweepCsv(rows));
}

// 8. Fractional rate sweep.
void SweepCheck(const Context& ctx, Outcome& o) {
  DeskRun& run = Desk(ctx);
  NicModel model = LoadModel(run.archive);
  auto metric = LoadMetric(run.archive);
  const auto rows = Sweep(model, *metric, run.heldout, RealismWeight(0.0), 0.25);
  const std::string csv = SweepCsv(rows);
  const auto lines = std::count(csv.begin(), csv.end(), '\n');
  o.Require(rows.size() == 9 && lines == 10, "9-point sweep for Q=3");
  std::vector<double> q, bpp;
  for (const auto& r : rows) {
    q.push_back(r.q_frac);
    bpp.push_back(r.bpp);
  }
  const double rho = Spearman(q, bpp);
  o.Require(rho >= 0.9, "Spearman(q_frac, bpp) >= 0.9");

  // Row count for Q=5 on a small untrained model.
  NicModel five = TinyModel(5, 801);
  auto five_metric = FeatureStackMetric::FromSeed(1);
  const auto rows5 = Sweep(five, *five_metric, {run.heldout.front()}, RealismWeight(0.0), 0.25);
  const std::string csv5 = SweepCsv(rows5);
  o.Require(std::count(csv5.begin(), csv5.end(), '\n') == 18, "17 CSV rows for Q=5");

  const fs::path report = ctx.work_dir / "report";
  fs::create_directories(report);
  WriteText((report / "sweep.csv").string(), csv);
  PlotSweep((report / "sweep.png").string(), rows);
  o.detail << "Spearman " << rho << " over " << rows.size() << " points, Q=5 rows "
           << rows5.size() << "; bpp";
  for (double b : bpp) o.detail << " " << b;
}

// 9. Reality-score histogram.
void RealityTool(const Context& ctx, Outcome& o) {
  const int levels = 3;
  NicModel model = TinyModel(levels, 901);
  torch::manual_seed(902);
  Discriminator disc(TinyDisc(DesignKind::kIndependent, levels));
  std::mt19937_64 rng(903);
  std::vector<torch::Tensor> images;
  for (int i = 0; i < 4; ++i) images.push_back(ToTensor(SyntheticImage(rng, 96, 96)));

  for (auto kind : {AdvKind::kRgan, AdvKind::kHrrgan}) {
    RealityConfig cfg;
    cfg.kind = kind;
    cfg.crops = 60;
    cfg.bins = 8;
    cfg.seed = 904;
    const auto r = RealityHistogram(model, disc, images, cfg);
    const auto& h = r.histogram;
    o.Require(h.total() == static_cast<std::int64_t>(r.samples.size()), "counts conserved");
    o.Require(static_cast<std::int64_t>(r.samples.size()) + r.excluded == cfg.crops,
              "every crop is included or excluded");
    o.Require(std::is_sorted(h.x_edges.begin(), h.x_edges.end()) &&
                  std::is_sorted(h.y_edges.begin(), h.y_edges.end()),
              "monotone bin edges");
    o.Require(kind == AdvKind::kHrrgan || r.excluded == 0, "RGAN excludes nothing");
    for (const auto& s : r.samples) {
      o.Require(kind == AdvKind::kRgan || s.q < levels - 1, "HRRGAN skips the top level");
    }
  }
  const auto x = torch::rand({3, 3, 64, 64});
  for (int q = 0; q < levels; ++q) {
    const auto s = RelativeRealityScore(disc, x, x, q);
    o.Require(s.abs().max().item<double>() == 0.0, "RGAN score is exactly 0 on x_hat == x");
  }
  o.detail << "counts conserved for RGAN and HRRGAN, zero point exact";

  // The qualitative MSE/score pattern on the trained model is reported only.
  const fs::path ckpt = ctx.work_dir / "run" / "model.ckpt";
  if (fs::exists(ckpt) && fs::exists(ctx.work_dir / "heldout")) {
    const auto archive = TensorArchive::Load(ckpt.string());
    NicModel trained = LoadModel(archive);
    Discriminator trained_disc = LoadDiscriminator(archive);
    if (!trained_disc.is_empty()) {
      const auto held = LoadImages(ctx.work_dir / "heldout");
      const fs::path report = ctx.work_dir / "report";
      fs::create_directories(report);
      for (auto kind : {AdvKind::kRgan, AdvKind::kHrrgan}) {
        RealityConfig cfg;
        cfg.kind = kind;
        const auto r = RealityHistogram(trained, trained_disc, held, cfg);
        const std::string name = ToString(kind);
        WriteText((report / ("dhist_" + name + ".csv")).string(), HistogramCsv(r.histogram));
        WriteText((report / ("dhist_" + name + "_samples.csv")).string(),
                  RealitySamplesCsv(r.samples));
        PlotHistogram((report / ("dhist_" + name + ".png")).string(), r.histogram);
        o.detail << "; trained " << name << " pearson(mse, score) " << r.correlation
                 << " over " << r.samples.size() << " crops";
      }
    }
  }
}

}  // namespace
}  // namespace crdr::acceptance

int main(int argc, char** argv) {
  using namespace crdr::acceptance;
  CLI::App app{"crdr acceptance suite"};
  std::vector<int> selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  Context ctx{"acceptance", "configs/desk.cfg"};
  std::string work_dir = ctx.work_dir.string();
  app.add_option("--criteria", selected, "Comma-separated criterion numbers")->delimiter(',');
  app.add_option("--work-dir", work_dir, "Corpus, checkpoint and report directory");
  app.add_option("--config", ctx.config, "Desk-scale training config");
  CLI11_PARSE(app, argc, argv);
  ctx.work_dir = work_dir;
  torch::set_num_threads(1);

  const std::map<int, std::pair<std::string, std::function<void(const Context&, Outcome&)>>>
      criteria = {
          {1, {"loss oracle", LossOracle}},
          {2, {"gradient checks", GradientChecks}},
          {3, {"entropy coder", EntropyCoder}},
          {4, {"bitstream", BitstreamChecks}},
          {5, {"HRRGAN semantics", AlgorithmSemantics}},
          {6, {"desk-scale training trend", TrainingTrend}},
          {7, {"discriminator zoo", ZooContract}},
          {8, {"rate sweep", SweepCheck}},
          {9, {"reality histogram", RealityTool}},
      };
  bool all = true;
  for (int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    Outcome o;
    try {
      it->second.second(ctx, o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    all = all && o.pass;
    std::printf("criterion %d %s: %s | %s\n", id, it->second.first.c_str(),
                o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
