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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include "crdr/checkpoint.hpp"
#include "crdr/codec.hpp"
#include "crdr/config.hpp"
#include "crdr/error.hpp"
#include "crdr/evaluation.hpp"
#include "crdr/image_io.hpp"
#include "crdr/synthetic.hpp"
#include "crdr/training.hpp"

namespace crdr::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string ResolveCheckpoint(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* dir = std::getenv(kCheckpointDirEnv); dir != nullptr && *dir != '\0') {
    return (fs::path(dir) / "model.ckpt").string();
  }
  throw UsageError(std::string("no checkpoint: pass --ckpt or set ") + kCheckpointDirEnv);
}

std::vector<std::uint8_t> ReadBytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void WriteBytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("write failed for " + path);
}

std::vector<torch::Tensor> LoadImages(const std::string& dir) {
  std::vector<torch::Tensor> images;
  for (const auto& path : ListPngs(dir)) images.push_back(ToTensor(ReadPng(path)));
  if (images.empty()) throw FormatError("no PNG images in " + dir);
  return images;
}

void Emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    WriteText(path, text);
  }
}

struct TrainArgs {
  std::string config;
  std::string corpus;
  std::string output_dir;
  std::string resume;
  std::vector<std::string> overrides;
  std::int64_t stage1_steps = -1;
  std::int64_t stage2_steps = -1;
  std::int64_t max_steps = -1;
  std::int64_t seed = -1;
  int log_every = 100;
};

int Train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  KeyValueConfig kv = KeyValueConfig::Load(a.config);
  for (const auto& o : a.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got " + o);
    kv.Set(o.substr(0, eq), o.substr(eq + 1));
  }
  if (!a.corpus.empty()) kv.Set("corpus", a.corpus);
  if (!a.output_dir.empty()) kv.Set("output_dir", a.output_dir);
  if (a.stage1_steps >= 0) kv.Set("stage1_steps", std::to_string(a.stage1_steps));
  if (a.stage2_steps >= 0) kv.Set("stage2_steps", std::to_string(a.stage2_steps));
  if (a.seed >= 0) kv.Set("seed", std::to_string(a.seed));
  const TrainConfig cfg = TrainConfig::FromConfig(kv);

  fs::create_directories(cfg.output_dir);
  const std::string effective = cfg.ToConfig().ToText();
  WriteText((fs::path(cfg.output_dir) / "effective.cfg").string(), effective);
  err << "# effective config\n" << effective;

  auto corpus = std::make_shared<const ImageCorpus>(ImageCorpus::Load(cfg.corpus));
  err << "# corpus: " << corpus->size() << " images\n";
  Trainer trainer(cfg, corpus);
  const bool resuming = !a.resume.empty();
  if (resuming) trainer.Resume(TensorArchive::Load(a.resume));

  const std::string log_path = (fs::path(cfg.output_dir) / "metrics.csv").string();
  std::ofstream log(log_path, resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw FormatError("cannot write " + log_path);
  if (!resuming) log << StepReport::CsvHeader() << "\n";
  trainer.Run(
      [&](const StepReport& r) {
        log << r.ToCsv() << "\n";
        if (a.log_every > 0 && (r.step + 1) % a.log_every == 0) {
          err << "step " << r.step + 1 << "/" << trainer.total_steps() << " stage "
              << r.stage << " loss " << r.loss.total << " bpp " << r.bpp << "\n";
        }
      },
      a.max_steps);
  log.flush();
  out << "trained to step " << trainer.step() << " of " << trainer.total_steps() << "\n";
  return kExitOk;
}

int Compress(const std::string& in, const std::string& out_path, double q,
             const std::string& ckpt, std::ostream& out) {
  NicModel model = LoadModel(TensorArchive::Load(ResolveCheckpoint(ckpt)));
  const QualityControl qc = QualityControl::FromFloat(q, model->config().num_levels);
  const RgbImage img = ReadPng(in);
  const Bitstream stream = Compress(ToTensor(img), qc, model);
  WriteBytes(out_path, stream.Serialize());
  out << out_path << ": " << stream.size() << " bytes, "
      << Bpp(stream.size(), img.height, img.width) << " bpp at q="
      << qc.Quantized().value() << "\n";
  return kExitOk;
}

int Decompress(const std::string& in, const std::string& out_path, double beta,
               const std::string& ckpt, std::ostream& out) {
  NicModel model = LoadModel(TensorArchive::Load(ResolveCheckpoint(ckpt)));
  const RealismWeight w(beta, model->config().beta_max);
  const Bitstream stream = Bitstream::Parse(ReadBytes(in));
  const RgbImage img = FromTensor(Decompress(stream, w, model));
  WritePng(out_path, img);
  out << out_path << ": " << img.width << "x" << img.height << "\n";
  return kExitOk;
}

int Eval(const std::string& dir, double beta, const std::string& ckpt,
         const std::string& csv, std::ostream& out) {
  const TensorArchive archive = TensorArchive::Load(ResolveCheckpoint(ckpt));
  NicModel model = LoadModel(archive);
  auto metric = LoadMetric(archive);
  const RealismWeight w(beta, model->config().beta_max);
  const auto images = LoadImages(dir);
  std::vector<RdPoint> rows;
  for (int q = 0; q < model->config().num_levels; ++q) {
    rows.push_back(EvaluateImages(model, *metric, images,
                                  QualityControl(q, 0.0, model->config().num_levels), w));
  }
  Emit(SweepCsv(rows), csv, out);
  return kExitOk;
}

int SweepCmd(const std::string& dir, double beta, double step, const std::string& ckpt,
             const std::string& csv, const std::string& plot, std::ostream& out) {
  const TensorArchive archive = TensorArchive::Load(ResolveCheckpoint(ckpt));
  NicModel model = LoadModel(archive);
  auto metric = LoadMetric(archive);
  const RealismWeight w(beta, model->config().beta_max);
  SweepPoints(model->config().num_levels, step);  // validates step early
  const auto rows = Sweep(model, *metric, LoadImages(dir), w, step);
  Emit(SweepCsv(rows), csv, out);
  if (!plot.empty()) PlotSweep(plot, rows);
  return kExitOk;
}

struct DhistArgs {
  std::string dir;
  std::string kind;
  std::string ckpt;
  std::string csv;
  std::string samples;
  std::string plot;
  RealityConfig cfg;
};

int AnalyzeDhist(DhistArgs a, std::ostream& out, std::ostream& err) {
  const AdvKind kind = ParseAdvKind(a.kind);
  if (kind != AdvKind::kRgan && kind != AdvKind::kHrrgan) {
    throw DomainError("--kind must be rgan or hrrgan");
  }
  a.cfg.kind = kind;
  const TensorArchive archive = TensorArchive::Load(ResolveCheckpoint(a.ckpt));
  NicModel model = LoadModel(archive);
  Discriminator disc = LoadDiscriminator(archive);
  if (!disc) throw FormatError("checkpoint holds no discriminator (stage 1 only)");
  RealismWeight(a.cfg.beta, model->config().beta_max);
  const RealityReport report = RealityHistogram(model, disc, LoadImages(a.dir), a.cfg);
  Emit(HistogramCsv(report.histogram), a.csv, out);
  if (!a.samples.empty()) WriteText(a.samples, RealitySamplesCsv(report.samples));
  if (!a.plot.empty()) PlotHistogram(a.plot, report.histogram);
  std::ostringstream summary;
  summary << "# kind=" << ToString(kind) << " included=" << report.samples.size()
          << " excluded=" << report.excluded << " pearson(mse,score)=" << report.correlation
          << "\n";
  (a.csv.empty() ? err : out) << summary.str();
  return kExitOk;
}

int Info(const std::string& ckpt, std::ostream& out) {
  const std::string path = ResolveCheckpoint(ckpt);
  const TensorArchive archive = TensorArchive::Load(path);
  NicModel model = LoadModel(archive);
  const ModelConfig& m = model->config();
  out << "checkpoint: " << path << "\n"
      << "step: " << archive.state.GetInt("step", 0) << "\n"
      << "levels: " << m.num_levels << "  channels: " << m.channels
      << "  latent_channels: " << m.latent_channels << "  beta_max: " << m.beta_max << "\n"
      << "parameters:\n";
  for (const auto& [name, count] : model->ParameterCounts()) {
    out << "  " << name << ": " << count << "\n";
  }
  out << "  total: " << CountParameters(*model) << "\n";
  Discriminator disc = LoadDiscriminator(archive);
  if (!disc) {
    out << "discriminator: none\n";
    return kExitOk;
  }
  const ParamReport r = disc->Report();
  out << "discriminator (" << ToString(disc->config().kind) << "):\n"
      << "  shared: " << r.shared << "\n";
  for (std::size_t q = 0; q < r.per_level.size(); ++q) {
    out << "  level " << q << ": " << r.per_level[q] << "\n";
  }
  out << "  total: " << r.total << "\n";
  return kExitOk;
}

}  // namespace

int RunCommand(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"crdr: variable-rate generative image codec"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Two-stage training from a config file");
  c_train->add_option("--config", train.config, "Key-value config file")->required();
  c_train->add_option("--corpus", train.corpus, "Directory of training PNGs");
  c_train->add_option("--output-dir", train.output_dir, "Checkpoint and log directory");
  c_train->add_option("--stage1-steps", train.stage1_steps);
  c_train->add_option("--stage2-steps", train.stage2_steps);
  c_train->add_option("--seed", train.seed);
  c_train->add_option("--max-steps", train.max_steps, "Stop after this many steps");
  c_train->add_option("--resume", train.resume, "Checkpoint to continue from");
  c_train->add_option("--set", train.overrides, "key=value config override");
  c_train->add_option("--log-every", train.log_every);

  std::string in, out_path, ckpt, csv, plot;
  double q = 0.0, beta = 0.0, step = 0.25;
  auto* c_compress = app.add_subcommand("compress", "PNG to .crdr");
  c_compress->add_option("--in", in)->required();
  c_compress->add_option("--out", out_path)->required();
  c_compress->add_option("--q", q, "Quality dial, level + fraction")->required();
  c_compress->add_option("--ckpt", ckpt);

  auto* c_decompress = app.add_subcommand("decompress", ".crdr to PNG");
  c_decompress->add_option("--in", in)->required();
  c_decompress->add_option("--out", out_path)->required();
  c_decompress->add_option("--beta", beta, "Realism weight")->required();
  c_decompress->add_option("--ckpt", ckpt);

  std::string dir;
  auto* c_eval = app.add_subcommand("eval", "bpp, PSNR and perceptual distance per level");
  c_eval->add_option("--dir", dir)->required();
  c_eval->add_option("--beta", beta)->required();
  c_eval->add_option("--ckpt", ckpt);
  c_eval->add_option("--csv", csv);

  auto* c_sweep = app.add_subcommand("sweep", "Rate sweep over fractional q");
  c_sweep->add_option("--dir", dir)->required();
  c_sweep->add_option("--beta", beta)->required();
  c_sweep->add_option("--step", step)->required();
  c_sweep->add_option("--ckpt", ckpt);
  c_sweep->add_option("--csv", csv);
  c_sweep->add_option("--plot", plot);

  DhistArgs dh;
  auto* c_dhist = app.add_subcommand("analyze-dhist", "MSE against relative reality score");
  c_dhist->add_option("--dir", dh.dir)->required();
  c_dhist->add_option("--kind", dh.kind, "rgan or hrrgan")->required();
  c_dhist->add_option("--ckpt", dh.ckpt);
  c_dhist->add_option("--crops", dh.cfg.crops);
  c_dhist->add_option("--crop-size", dh.cfg.crop_size);
  c_dhist->add_option("--bins", dh.cfg.bins);
  c_dhist->add_option("--beta", dh.cfg.beta);
  c_dhist->add_option("--seed", dh.cfg.seed);
  c_dhist->add_option("--csv", dh.csv, "Histogram CSV");
  c_dhist->add_option("--samples", dh.samples, "Per-crop CSV");
  c_dhist->add_option("--plot", dh.plot);

  auto* c_info = app.add_subcommand("info", "Parameter counts per component");
  c_info->add_option("--ckpt", ckpt);

  int count = 2048;
  std::int64_t size = 96;
  std::uint64_t seed = 0;
  auto* c_corpus = app.add_subcommand("make-corpus", "Write a procedural PNG corpus");
  c_corpus->add_option("--out", out_path)->required();
  c_corpus->add_option("--count", count);
  c_corpus->add_option("--size", size);
  c_corpus->add_option("--seed", seed);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*c_train) return Train(train, out, err);
    if (*c_compress) return Compress(in, out_path, q, ckpt, out);
    if (*c_decompress) return Decompress(in, out_path, beta, ckpt, out);
    if (*c_eval) return Eval(dir, beta, ckpt, csv, out);
    if (*c_sweep) return SweepCmd(dir, beta, step, ckpt, csv, plot, out);
    if (*c_dhist) return AnalyzeDhist(dh, out, err);
    if (*c_info) return Info(ckpt, out);
    if (*c_corpus) {
      WriteSyntheticCorpus(out_path, count, size, seed);
      out << "wrote " << count << " images to " << out_path << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const ParameterError& e) {
    err << "domain error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const DecodeError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const CompatibilityError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const SizeError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace crdr::cli
