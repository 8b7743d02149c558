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

#ifndef CRDR_EVALUATION_HPP_
#define CRDR_EVALUATION_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

#include "crdr/discriminator.hpp"
#include "crdr/losses.hpp"
#include "crdr/model.hpp"
#include "crdr/perceptual.hpp"
#include "crdr/quality.hpp"

namespace crdr {

inline constexpr double kPsnrCap = 100.0;

// PSNR on the 0-255 scale of images given in [0, 1]; MSE == 0 gives 100 dB.
double Psnr(const torch::Tensor& x, const torch::Tensor& x_hat);
double PsnrFromMse(double mse_255);
// 8 * bytes / (H * W).
double Bpp(std::size_t stream_bytes, std::int64_t height, std::int64_t width);

// Mean that does not depend on the order of values.
double StableMean(std::vector<double> values);

struct RdPoint {
  double q_frac = 0.0;
  double bpp = 0.0;
  double psnr = 0.0;
  double perceptual = 0.0;
};

// Compress + decompress every image (each (1, 3, H, W) in [0, 1]) at qc and
// beta; reconstructions are rounded to 8 bits before scoring.
RdPoint EvaluateImages(NicModel& model, PerceptualMetric& metric,
                       const std::vector<torch::Tensor>& images,
                       const QualityControl& qc, const RealismWeight& beta);

// {0, step, 2 step, ...} up to Q - 1, with Q - 1 always last.
std::vector<double> SweepPoints(int num_levels, double step);

std::vector<RdPoint> Sweep(NicModel& model, PerceptualMetric& metric,
                           const std::vector<torch::Tensor>& images,
                           const RealismWeight& beta, double step = 0.25);

// Columns q_frac,bpp,psnr,perceptual.
std::string SweepCsv(const std::vector<RdPoint>& rows);
void WriteText(const std::string& path, const std::string& text);
// PSNR against bpp, one marker per row.
void PlotSweep(const std::string& path, const std::vector<RdPoint>& rows);

// Spearman rank correlation with average ranks for ties.
double Spearman(const std::vector<double>& a, const std::vector<double>& b);

struct RealitySample {
  int q = 0;
  double mse = 0.0;    // 0-255 scale
  double score = 0.0;  // relative reality score
};

struct Histogram2D {
  std::vector<double> x_edges;  // bins + 1 entries
  std::vector<double> y_edges;
  std::vector<std::int64_t> counts;  // row-major, x bins by y bins
  std::int64_t bins_x() const { return static_cast<std::int64_t>(x_edges.size()) - 1; }
  std::int64_t bins_y() const { return static_cast<std::int64_t>(y_edges.size()) - 1; }
  std::int64_t at(std::int64_t i, std::int64_t j) const {
    return counts[static_cast<std::size_t>(i * bins_y() + j)];
  }
  std::int64_t total() const;
};

// Edges span the data range; values on the upper edge land in the last bin.
Histogram2D BuildHistogram(const std::vector<double>& x, const std::vector<double>& y,
                           int bins_x, int bins_y);

// Spatial mean of D(x_hat) minus spatial mean of D(reference), both scored
// by the level-q path; one value per batch element.
torch::Tensor RelativeRealityScore(Discriminator& disc, const torch::Tensor& x_hat,
                                   const torch::Tensor& reference, int q);

struct RealityConfig {
  AdvKind kind = AdvKind::kRgan;  // kRgan or kHrrgan
  int crops = 400;
  int crop_size = 64;
  int bins = 20;
  double beta = 0.0;
  std::uint64_t seed = 0;
};

struct RealityReport {
  std::vector<RealitySample> samples;  // included crops only
  Histogram2D histogram;               // x: MSE, y: score
  std::int64_t excluded = 0;           // HRRGAN crops at the top level
  double correlation = 0.0;            // Pearson(MSE, score)
};

// Random crops at uniformly sampled levels. HRRGAN compares against the
// level q + 1 reconstruction and skips crops drawn at q = Q - 1.
RealityReport RealityHistogram(NicModel& model, Discriminator& disc,
                               const std::vector<torch::Tensor>& images,
                               const RealityConfig& cfg);

// Columns mse_lo,mse_hi,score_lo,score_hi,count.
std::string HistogramCsv(const Histogram2D& h);
// Columns q,mse,score.
std::string RealitySamplesCsv(const std::vector<RealitySample>& samples);
// Heat map of the counts.
void PlotHistogram(const std::string& path, const Histogram2D& h);

}  // namespace crdr

#endif  // CRDR_EVALUATION_HPP_
