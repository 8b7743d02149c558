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

#include "crdr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "crdr/codec.hpp"
#include "crdr/error.hpp"
#include "crdr/image_io.hpp"

namespace crdr {
namespace {

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double Pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2 || b.size() != n) return 0.0;
  const double ma = StableMean(a);
  const double mb = StableMean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> Ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// Minimal RGB raster for plots.
class Canvas {
 public:
  Canvas(int w, int h) : img_{h, w, std::vector<std::uint8_t>(std::size_t(w) * h * 3, 255)} {}

  void Set(int x, int y, std::array<std::uint8_t, 3> c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    const auto i = (static_cast<std::size_t>(y) * img_.width + x) * 3;
    std::copy(c.begin(), c.end(), img_.pixels.begin() + static_cast<std::ptrdiff_t>(i));
  }
  void Line(int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      Set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) { err += dy; x0 += sx; }
      if (e2 <= dx) { err += dx; y0 += sy; }
    }
  }
  void Fill(int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> c) {
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) Set(x, y, c);
  }
  const RgbImage& image() const { return img_; }

 private:
  RgbImage img_;
};

constexpr int kPlotW = 480;
constexpr int kPlotH = 320;
constexpr int kMargin = 32;

}  // namespace

double PsnrFromMse(double mse_255) {
  if (!(mse_255 >= 0.0)) throw NumericError("MSE must be nonnegative");
  if (mse_255 == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse_255));
}

double Psnr(const torch::Tensor& x, const torch::Tensor& x_hat) {
  if (x.sizes() != x_hat.sizes()) throw DimensionError("PSNR needs equal shapes");
  const double mse =
      (x.to(torch::kDouble) - x_hat.to(torch::kDouble)).mul(255.0).square().mean().item<double>();
  return PsnrFromMse(mse);
}

double Bpp(std::size_t stream_bytes, std::int64_t height, std::int64_t width) {
  if (height < 1 || width < 1) throw DomainError("image size must be positive");
  return 8.0 * static_cast<double>(stream_bytes) / static_cast<double>(height * width);
}

double StableMean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(values.size());
}

RdPoint EvaluateImages(NicModel& model, PerceptualMetric& metric,
                       const std::vector<torch::Tensor>& images,
                       const QualityControl& qc, const RealismWeight& beta) {
  if (images.empty()) throw DomainError("no images to evaluate");
  torch::NoGradGuard no_grad;
  std::vector<double> bpp, psnr, perceptual;
  for (const auto& img : images) {
    const Bitstream stream = Compress(img, qc, model);
    const auto x_hat = Decompress(stream, beta, model).mul(255.0).round().div(255.0);
    bpp.push_back(Bpp(stream.size(), img.size(2), img.size(3)));
    psnr.push_back(Psnr(img, x_hat));
    perceptual.push_back(metric.Distance(img, x_hat).mean().item<double>());
  }
  return {qc.Quantized().value(), StableMean(bpp), StableMean(psnr),
          StableMean(perceptual)};
}

std::vector<double> SweepPoints(int num_levels, double step) {
  if (num_levels < 1) throw DomainError("num_levels must be >= 1");
  if (!(step > 0.0) || step > 1.0) throw DomainError("sweep step must be in (0, 1]");
  const double top = num_levels - 1;
  std::vector<double> points;
  for (int k = 0;; ++k) {
    const double q = k * step;
    if (q >= top - 1e-9) break;
    points.push_back(q);
  }
  points.push_back(top);
  return points;
}

std::vector<RdPoint> Sweep(NicModel& model, PerceptualMetric& metric,
                           const std::vector<torch::Tensor>& images,
                           const RealismWeight& beta, double step) {
  const int levels = model->config().num_levels;
  std::vector<RdPoint> rows;
  for (double q : SweepPoints(levels, step)) {
    rows.push_back(
        EvaluateImages(model, metric, images, QualityControl::FromFloat(q, levels), beta));
  }
  return rows;
}

std::string SweepCsv(const std::vector<RdPoint>& rows) {
  std::string out = "q_frac,bpp,psnr,perceptual\n";
  for (const auto& r : rows) {
    out += Fixed(r.q_frac) + "," + Fixed(r.bpp) + "," + Fixed(r.psnr) + "," +
           Fixed(r.perceptual) + "\n";
  }
  return out;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path);
  f << text;
  if (!f) throw FormatError("write failed for " + path);
}

void PlotSweep(const std::string& path, const std::vector<RdPoint>& rows) {
  Canvas c(kPlotW, kPlotH);
  const std::array<std::uint8_t, 3> black{0, 0, 0}, blue{20, 60, 200};
  c.Line(kMargin, kPlotH - kMargin, kPlotW - kMargin, kPlotH - kMargin, black);
  c.Line(kMargin, kMargin, kMargin, kPlotH - kMargin, black);
  if (!rows.empty()) {
    auto [bmin, bmax] = std::minmax_element(rows.begin(), rows.end(),
        [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
    auto [pmin, pmax] = std::minmax_element(rows.begin(), rows.end(),
        [](const RdPoint& a, const RdPoint& b) { return a.psnr < b.psnr; });
    const double bx = std::max(bmax->bpp - bmin->bpp, 1e-9);
    const double py = std::max(pmax->psnr - pmin->psnr, 1e-9);
    const int span_x = kPlotW - 3 * kMargin, span_y = kPlotH - 3 * kMargin;
    int px = -1, pyy = -1;
    for (const auto& r : rows) {
      const int x = kMargin * 2 + static_cast<int>(std::lround((r.bpp - bmin->bpp) / bx * span_x));
      const int y = kPlotH - kMargin * 2 -
                    static_cast<int>(std::lround((r.psnr - pmin->psnr) / py * span_y));
      if (px >= 0) c.Line(px, pyy, x, y, blue);
      c.Fill(x - 2, y - 2, x + 3, y + 3, blue);
      px = x;
      pyy = y;
    }
  }
  WritePng(path, c.image());
}

double Spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("Spearman needs equal lengths");
  return Pearson(Ranks(a), Ranks(b));
}

std::int64_t Histogram2D::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

Histogram2D BuildHistogram(const std::vector<double>& x, const std::vector<double>& y,
                           int bins_x, int bins_y) {
  if (x.size() != y.size()) throw DimensionError("histogram axes differ in length");
  if (bins_x < 1 || bins_y < 1) throw DomainError("histogram needs >= 1 bin per axis");
  auto edges = [](const std::vector<double>& v, int bins) {
    double lo = 0.0, hi = 1.0;
    if (!v.empty()) {
      const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
      lo = *mn;
      hi = *mx;
    }
    if (hi <= lo) {
      lo -= 0.5;
      hi += 0.5;
    }
    std::vector<double> e(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i < bins; ++i) e[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
    e.back() = hi;
    return e;
  };
  auto index = [](double v, const std::vector<double>& e) {
    const auto bins = static_cast<std::int64_t>(e.size()) - 1;
    const double t = (v - e.front()) / (e.back() - e.front());
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(t * bins)), 0,
                                    bins - 1);
  };
  Histogram2D h;
  h.x_edges = edges(x, bins_x);
  h.y_edges = edges(y, bins_y);
  h.counts.assign(static_cast<std::size_t>(bins_x) * bins_y, 0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(y[k])) {
      throw NumericError("histogram input is not finite");
    }
    ++h.counts[static_cast<std::size_t>(index(x[k], h.x_edges) * bins_y +
                                        index(y[k], h.y_edges))];
  }
  return h;
}

torch::Tensor RelativeRealityScore(Discriminator& disc, const torch::Tensor& x_hat,
                                   const torch::Tensor& reference, int q) {
  const auto fake = disc(x_hat, q).mean({1, 2, 3});
  const auto ref = disc(reference, q).mean({1, 2, 3});
  return fake - ref;
}

RealityReport RealityHistogram(NicModel& model, Discriminator& disc,
                               const std::vector<torch::Tensor>& images,
                               const RealityConfig& cfg) {
  if (cfg.kind != AdvKind::kRgan && cfg.kind != AdvKind::kHrrgan) {
    throw DomainError("reality histogram supports rgan and hrrgan only");
  }
  if (images.empty()) throw DomainError("no images for the reality histogram");
  if (cfg.crops < 1 || cfg.crop_size < kPadMultiple || cfg.crop_size % kPadMultiple != 0) {
    throw DomainError("reality histogram needs crops >= 1 and a crop size multiple of 64");
  }
  torch::NoGradGuard no_grad;
  model->eval();
  disc->eval();
  const int levels = model->config().num_levels;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, images.size() - 1);
  std::uniform_int_distribution<int> level(0, levels - 1);

  RealityReport report;
  for (int k = 0; k < cfg.crops; ++k) {
    const auto img = PadToMultiple(images[pick(rng)], cfg.crop_size);
    const auto top = std::uniform_int_distribution<std::int64_t>(0, img.size(2) - cfg.crop_size)(rng);
    const auto left = std::uniform_int_distribution<std::int64_t>(0, img.size(3) - cfg.crop_size)(rng);
    const int q = level(rng);
    if (cfg.kind == AdvKind::kHrrgan && q == levels - 1) {
      ++report.excluded;
      continue;
    }
    const auto x = img.slice(2, top, top + cfg.crop_size)
                       .slice(3, left, left + cfg.crop_size)
                       .to(torch::kFloat)
                       .contiguous();
    const auto x_hat = model->Forward(x, q, cfg.beta).x_hat;
    const auto reference =
        cfg.kind == AdvKind::kRgan ? x : model->Forward(x, q + 1, cfg.beta).x_hat;
    RealitySample s;
    s.q = q;
    s.mse = (x - x_hat).mul(255.0).square().mean().item<double>();
    s.score = RelativeRealityScore(disc, x_hat, reference, q).item<double>();
    report.samples.push_back(s);
  }
  std::vector<double> mse, score;
  for (const auto& s : report.samples) {
    mse.push_back(s.mse);
    score.push_back(s.score);
  }
  report.histogram = BuildHistogram(mse, score, cfg.bins, cfg.bins);
  report.correlation = Pearson(mse, score);
  return report;
}

std::string HistogramCsv(const Histogram2D& h) {
  std::string out = "mse_lo,mse_hi,score_lo,score_hi,count\n";
  for (std::int64_t i = 0; i < h.bins_x(); ++i) {
    for (std::int64_t j = 0; j < h.bins_y(); ++j) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      out += Fixed(h.x_edges[ui]) + "," + Fixed(h.x_edges[ui + 1]) + "," +
             Fixed(h.y_edges[uj]) + "," + Fixed(h.y_edges[uj + 1]) + "," +
             std::to_string(h.at(i, j)) + "\n";
    }
  }
  return out;
}

std::string RealitySamplesCsv(const std::vector<RealitySample>& samples) {
  std::string out = "q,mse,score\n";
  for (const auto& s : samples) {
    out += std::to_string(s.q) + "," + Fixed(s.mse) + "," + Fixed(s.score) + "\n";
  }
  return out;
}

void PlotHistogram(const std::string& path, const Histogram2D& h) {
  Canvas c(kPlotW, kPlotH);
  const std::int64_t peak = h.counts.empty() ? 0 : *std::max_element(h.counts.begin(), h.counts.end());
  const int cw = (kPlotW - 2 * kMargin) / static_cast<int>(h.bins_x());
  const int ch = (kPlotH - 2 * kMargin) / static_cast<int>(h.bins_y());
  for (std::int64_t i = 0; i < h.bins_x(); ++i) {
    for (std::int64_t j = 0; j < h.bins_y(); ++j) {
      const double t = peak > 0 ? static_cast<double>(h.at(i, j)) / peak : 0.0;
      const auto shade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
      const int x0 = kMargin + static_cast<int>(i) * cw;
      const int y1 = kPlotH - kMargin - static_cast<int>(j) * ch;
      c.Fill(x0, y1 - ch, x0 + cw, y1, {shade, shade, 255});
    }
  }
  const std::array<std::uint8_t, 3> black{0, 0, 0};
  c.Line(kMargin, kPlotH - kMargin, kPlotW - kMargin, kPlotH - kMargin, black);
  c.Line(kMargin, kMargin, kMargin, kPlotH - kMargin, black);
  WritePng(path, c.image());
}

}  // namespace crdr
