#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "morph/tensor.hpp"

namespace morph {

/// Per-frame latents at a common timestep; each entry is [C,h,w].
using LatentSequence = std::vector<Tensor>;

/// Lossless stand-in for the autoencoder: 2x2 space-to-depth followed by a
/// fixed orthonormal 12x12 channel mix (orthonormal DCT-II).
class Codec {
 public:
  static constexpr std::size_t kFactor = 2;
  static constexpr std::size_t kLatentChannels = 12;

  /// [3,H,W] -> [12,H/2,W/2]; H and W must be even.
  static Tensor encode(const Tensor& image);
  /// [12,h,w] -> [3,2h,2w].
  static Tensor decode(const Tensor& latent);

  static const std::array<double, kLatentChannels * kLatentChannels>& mixing();
};

/// Query/key/value matrices seen by one attention layer for one frame.
struct QKV {
  Tensor q;
  Tensor k;
  Tensor v;
  friend bool operator==(const QKV&, const QKV&) = default;
};

enum class HookMode { passthrough, record, override };

/// Replacement tensors for one frame. K and V are overridden together.
struct FrameOverride {
  std::optional<Tensor> q;
  std::optional<Tensor> k;
  std::optional<Tensor> v;
};

struct LayerHook {
  HookMode mode = HookMode::passthrough;
  /// Override mode only: one entry per frame of the sequence.
  std::vector<FrameOverride> frames;
};

/// Record/override configuration for one predict_noise pass.
struct AttentionHooks {
  std::map<int, LayerHook> layers;
  /// Record sink, filled for layers in record mode: layer -> per-frame QKV.
  std::map<int, std::vector<QKV>> recorded;

  static AttentionHooks record(const std::vector<int>& layer_ids);
};

struct BackendOptions {
  std::uint64_t seed = 0;
  int train_steps = 1000;
  std::size_t hidden = 32;
  std::size_t head_dim = 16;
  /// Attention runs on the latent grid average-pooled by this factor.
  std::size_t pool = 4;
  /// Scale on the (spectrally normalized) input projection. Bounds the
  /// predictor's sensitivity to the latent so DDIM round trips stay tight.
  double input_gain = 0.1;
};

/// Seed-derived weights of the toy noise predictor.
struct DenoiserWeights {
  static constexpr std::size_t kTimeEmbedding = 64;
  static constexpr std::size_t kLayers = 2;

  struct AttentionLayer {
    Tensor wq, wk, wv, wo;
    friend bool operator==(const AttentionLayer&, const AttentionLayer&) = default;
  };

  Tensor input;                                  // [12, hidden]
  Tensor time;                                   // [64, hidden]
  std::array<AttentionLayer, kLayers> attention;
  std::array<Tensor, kLayers> mixing;            // [hidden, hidden]
  Tensor output;                                 // [hidden, 12]

  static DenoiserWeights generate(const BackendOptions& options);
  friend bool operator==(const DenoiserWeights&, const DenoiserWeights&) = default;
};

/// Rescales w so its power-iteration spectral norm estimate is at most 1.
Tensor spectral_normalize(const Tensor& w, int iterations = 8);

/// Sinusoidal timestep features of length DenoiserWeights::kTimeEmbedding.
std::vector<double> timestep_features(int t);

/// Deterministic desk-scale noise predictor with two cross-frame attention layers.
///
/// Each frame attends from its own pooled tokens to the concatenated tokens of
/// frames [i-1, i, i+1] (indices clamped at the sequence ends).
class ToyDenoiser {
 public:
  explicit ToyDenoiser(BackendOptions options = {});

  const BackendOptions& options() const { return options_; }
  const DenoiserWeights& weights() const { return weights_; }
  static constexpr int num_layers() { return static_cast<int>(DenoiserWeights::kLayers); }

  LatentSequence predict_noise(const LatentSequence& latents, int t, AttentionHooks& hooks) const;
  LatentSequence predict_noise(const LatentSequence& latents, int t) const;

 private:
  BackendOptions options_;
  DenoiserWeights weights_;
};

}  // namespace morph
