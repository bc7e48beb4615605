#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "morph/asdm.hpp"
#include "morph/tensor.hpp"

namespace morph {

/// Multi-scale features of one image; level L has spatial dims input / 2^(L+1).
struct FeaturePyramid {
  static constexpr std::size_t kLevels = 3;
  std::array<Tensor, kLevels> levels;

  friend bool operator==(const FeaturePyramid&, const FeaturePyramid&) = default;
};

/// Fixed-seed random convolutional pyramid: three 3x3 stride-2 convolutions
/// (3 -> 8 -> 16 -> 32 channels), zero padding, no bias, ReLU.
class FeatureExtractor {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x5eed;
  static constexpr std::array<std::size_t, FeaturePyramid::kLevels + 1> kChannels{3, 8, 16, 32};

  explicit FeatureExtractor(std::uint64_t seed = kDefaultSeed);

  /// Image [3,H,W] with H, W divisible by 8.
  FeaturePyramid extract(const Tensor& image) const;
  std::vector<FeaturePyramid> extract_all(std::span<const Tensor> images) const;

 private:
  std::array<Tensor, FeaturePyramid::kLevels> kernels_;  // [out, in, 3, 3]
};

/// C x C Gram matrix of a [C,H,W] feature map normalized by C*H*W.
Tensor gram(const Tensor& features);

/// Sum over levels of ||mu_a - mu_b|| + ||sigma_a - sigma_b||.
double style_distance(const FeaturePyramid& a, const FeaturePyramid& b);

/// L2 distance between the concatenated, flattened pyramids.
double feature_distance(const FeaturePyramid& a, const FeaturePyramid& b);

/// Feature distances between consecutive frames.
std::vector<double> adjacent_distances(std::span<const FeaturePyramid> frames);

/// Sum of adjacent-frame feature distances.
double ppl(std::span<const FeaturePyramid> frames);
/// Population std of adjacent-frame feature distances (0 for fewer than two).
double pdv(std::span<const FeaturePyramid> frames);

/// Mean over frames of sum over levels of
/// (1-a_i) MSE(G_i, G_style0) + a_i MSE(G_i, G_style1).
double style_loss(std::span<const FeaturePyramid> frames, const FeaturePyramid& style0, const FeaturePyramid& style1,
                  const AlphaSchedule& schedule);

/// Mean per-frame feature distance between generated and source frames.
double structure_distance(std::span<const FeaturePyramid> generated, std::span<const FeaturePyramid> source);

/// Cosine similarity; 1 when both vectors are zero, 0 when only one is.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Global average of the deepest level.
std::vector<double> pooled_embedding(const FeaturePyramid& p);

/// Mean cosine similarity of consecutive pooled embeddings (1 for a single frame).
double frame_similarity(std::span<const FeaturePyramid> frames);

struct MetricReport {
  double ppl = 0.0;
  double pdv = 0.0;
  double style_loss = 0.0;
  double structure_distance = 0.0;
  double frame_similarity = 0.0;
};

MetricReport evaluate_metrics(const FeatureExtractor& extractor, std::span<const Tensor> generated,
                              std::span<const Tensor> source, const Tensor& style0, const Tensor& style1,
                              const AlphaSchedule& schedule);

}  // namespace morph
