#include "morph/perceptual.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <random>
#include <stdexcept>

namespace morph {

namespace {

Tensor conv3x3_stride2_relu(const Tensor& in, const Tensor& kernel) {
  const std::size_t cin = in.dim(0), H = in.dim(1), W = in.dim(2);
  const std::size_t cout = kernel.dim(0);
  const std::size_t h = H / 2, w = W / 2;
  Tensor out({cout, h, w});
  const double* kd = kernel.data().data();
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cin; ++c) {
          const double* kc = kd + (o * cin + c) * 9;
          for (int dy = -1; dy <= 1; ++dy) {
            const auto iy = static_cast<std::ptrdiff_t>(2 * y) + dy;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
            for (int dx = -1; dx <= 1; ++dx) {
              const auto ix = static_cast<std::ptrdiff_t>(2 * x) + dx;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
              acc += kc[(dy + 1) * 3 + (dx + 1)] *
                     in.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
        out.at(o, y, x) = acc > 0.0 ? acc : 0.0;
      }
    }
  }
  return out;
}

double mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

double vec_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

}  // namespace

FeatureExtractor::FeatureExtractor(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < FeaturePyramid::kLevels; ++l) {
    const std::size_t cin = kChannels[l], cout = kChannels[l + 1];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(cin * 9)));
    Tensor k({cout, cin, 3, 3});
    for (double& x : k.data()) x = dist(rng);
    kernels_[l] = std::move(k);
  }
}

FeaturePyramid FeatureExtractor::extract(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) % 8 != 0 || image.dim(2) % 8 != 0) {
    throw std::invalid_argument("feature extraction expects a [3,H,W] image with H and W divisible by 8");
  }
  FeaturePyramid p;
  const Tensor* current = &image;
  for (std::size_t l = 0; l < FeaturePyramid::kLevels; ++l) {
    p.levels[l] = conv3x3_stride2_relu(*current, kernels_[l]);
    current = &p.levels[l];
  }
  return p;
}

std::vector<FeaturePyramid> FeatureExtractor::extract_all(std::span<const Tensor> images) const {
  std::vector<FeaturePyramid> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(extract(img));
  return out;
}

Tensor gram(const Tensor& f) {
  if (f.rank() != 3) throw std::invalid_argument("gram expects a [C,H,W] feature map");
  const std::size_t c = f.dim(0), plane = f.dim(1) * f.dim(2);
  const double norm = static_cast<double>(c * plane);
  Tensor g({c, c});
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = i; j < c; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < plane; ++p) acc += f[i * plane + p] * f[j * plane + p];
      g.at(i, j) = acc / norm;
      g.at(j, i) = g.at(i, j);
    }
  }
  return g;
}

double style_distance(const FeaturePyramid& a, const FeaturePyramid& b) {
  double total = 0.0;
  for (std::size_t l = 0; l < FeaturePyramid::kLevels; ++l) {
    const ChannelStats sa = channel_stats(a.levels[l]);
    const ChannelStats sb = channel_stats(b.levels[l]);
    if (sa.channels() != sb.channels()) throw std::invalid_argument("style_distance: channel mismatch");
    total += vec_distance(sa.mean, sb.mean) + vec_distance(sa.std, sb.std);
  }
  return total;
}

double feature_distance(const FeaturePyramid& a, const FeaturePyramid& b) {
  double acc = 0.0;
  for (std::size_t l = 0; l < FeaturePyramid::kLevels; ++l) {
    require_same_shape(a.levels[l], b.levels[l], "feature_distance");
    for (std::size_t i = 0; i < a.levels[l].size(); ++i) {
      const double d = a.levels[l][i] - b.levels[l][i];
      acc += d * d;
    }
  }
  return std::sqrt(acc);
}

std::vector<double> adjacent_distances(std::span<const FeaturePyramid> frames) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) out.push_back(feature_distance(frames[i], frames[i + 1]));
  return out;
}

double ppl(std::span<const FeaturePyramid> frames) {
  double total = 0.0;
  for (double d : adjacent_distances(frames)) total += d;
  return total;
}

double pdv(std::span<const FeaturePyramid> frames) {
  const auto d = adjacent_distances(frames);
  if (d.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(d.size()));
}

double style_loss(std::span<const FeaturePyramid> frames, const FeaturePyramid& style0, const FeaturePyramid& style1,
                  const AlphaSchedule& schedule) {
  if (frames.empty()) throw std::invalid_argument("style_loss: no frames");
  if (schedule.size() != frames.size()) {
    throw std::invalid_argument(fmt::format("style_loss: {} frames but {} alphas", frames.size(), schedule.size()));
  }
  std::array<Tensor, FeaturePyramid::kLevels> g0, g1;
  for (std::size_t l = 0; l < FeaturePyramid::kLevels; ++l) {
    g0[l] = gram(style0.levels[l]);
    g1[l] = gram(style1.levels[l]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const double a = schedule[i];
    for (std::size_t l = 0; l < FeaturePyramid::kLevels; ++l) {
      const Tensor g = gram(frames[i].levels[l]);
      total += (1.0 - a) * mse(g, g0[l]) + a * mse(g, g1[l]);
    }
  }
  return total / static_cast<double>(frames.size());
}

double structure_distance(std::span<const FeaturePyramid> generated, std::span<const FeaturePyramid> source) {
  if (generated.size() != source.size() || generated.empty()) {
    throw std::invalid_argument("structure_distance: frame counts must match and be non-zero");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < generated.size(); ++i) total += feature_distance(generated[i], source[i]);
  return total / static_cast<double>(generated.size());
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<double> pooled_embedding(const FeaturePyramid& p) {
  return channel_stats(p.levels.back()).mean;
}

double frame_similarity(std::span<const FeaturePyramid> frames) {
  if (frames.size() < 2) return 1.0;
  double total = 0.0;
  auto prev = pooled_embedding(frames[0]);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    auto cur = pooled_embedding(frames[i]);
    total += cosine_similarity(prev, cur);
    prev = std::move(cur);
  }
  return total / static_cast<double>(frames.size() - 1);
}

MetricReport evaluate_metrics(const FeatureExtractor& extractor, std::span<const Tensor> generated,
                              std::span<const Tensor> source, const Tensor& style0, const Tensor& style1,
                              const AlphaSchedule& schedule) {
  const auto gen = extractor.extract_all(generated);
  const auto src = extractor.extract_all(source);
  const auto s0 = extractor.extract(style0);
  const auto s1 = extractor.extract(style1);
  MetricReport r;
  r.ppl = ppl(gen);
  r.pdv = pdv(gen);
  r.style_loss = style_loss(gen, s0, s1, schedule);
  r.structure_distance = structure_distance(gen, src);
  r.frame_similarity = frame_similarity(gen);
  return r;
}

}  // namespace morph
