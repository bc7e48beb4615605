#pragma once

#include <vector>

#include "morph/adain.hpp"
#include "morph/asdm.hpp"
#include "morph/attention_injection.hpp"
#include "morph/config.hpp"
#include "morph/noise_schedule.hpp"
#include "morph/perceptual.hpp"
#include "morph/toy_backend.hpp"

namespace morph {

struct VideoInversion {
  LatentSequence clean;   // encoded source frames
  LatentSequence noise;   // terminal latents z_T per frame
  AttentionCache cache{CacheSource::content};
};

struct StyleInversion {
  Tensor clean;
  Tensor noise;
  AttentionCache cache;
  StatTrack track;
};

/// Attention features and optional statistics for one style slot.
struct StyleBranch {
  const AttentionCache* cache = nullptr;
  const StatTrack* track = nullptr;
};

struct MorphTimings {
  double inversion_s = 0.0;
  double presample_s = 0.0;
  double denoise_s = 0.0;
  double total_s = 0.0;
};

struct MorphRun {
  VideoInversion content;
  StyleInversion style0;
  StyleInversion style1;
  AlphaSchedule schedule{std::vector<double>{0.0}};
  double alpha_mid = 0.5;
  double s_max = 1.0;
  DistanceCurves curves;
  std::vector<Tensor> presampled;
  std::vector<Tensor> frames;
  MorphTimings timings;
};

/// Video style morphing on the toy latent-diffusion backend.
///
/// Inversion records attention inputs on the injection layers at every
/// sampling step. Denoising is step-major over the whole frame batch: at
/// each step the running latents are AdaIN-modulated (t >= t_a), then noise is
/// predicted with source queries (t >= t_qend) and style keys/values blended by
/// each frame's alpha, then a DDIM step is taken.
class MorphPipeline {
 public:
  explicit MorphPipeline(MorphConfig config);

  const MorphConfig& config() const { return config_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const ToyDenoiser& backend() const { return backend_; }
  const FeatureExtractor& features() const { return features_; }

  VideoInversion invert_video(const std::vector<Tensor>& frames) const;
  StyleInversion invert_style(const Tensor& image, CacheSource source = CacheSource::style0) const;

  /// Injected denoising from `noise`. With step_limit < steps the loop stops
  /// after that many noise predictions and returns the clean-latent estimate.
  LatentSequence denoise(const LatentSequence& noise, const AttentionCache& content, const StyleBranch& style0,
                         const StyleBranch& style1, const AlphaSchedule& alphas, int step_limit) const;
  LatentSequence denoise(const LatentSequence& noise, const AttentionCache& content, const StyleBranch& style0,
                         const StyleBranch& style1, const AlphaSchedule& alphas) const;

  /// Plain DDIM sampling with no hooks and no AdaIN.
  LatentSequence reconstruct(const LatentSequence& noise) const;

  /// Quick stylized frames from the first presample_steps denoising steps.
  std::vector<Tensor> presample(const VideoInversion& content, const StyleInversion& style0,
                                const StyleInversion& style1, const AlphaSchedule& alphas) const;

  DistanceCurves distance_curves(const std::vector<Tensor>& frames, const Tensor& style0,
                                 const Tensor& style1) const;

  MorphRun morph(const std::vector<Tensor>& video, const Tensor& style0, const Tensor& style1) const;

 private:
  MorphConfig config_;
  NoiseSchedule schedule_;
  ToyDenoiser backend_;
  FeatureExtractor features_;
};

/// Blend of two terminal style latents, alpha weighting style1.
Tensor initial_latent_interp(const Tensor& z0, const Tensor& z1, double alpha);

std::vector<Tensor> decode_all(const LatentSequence& latents);

}  // namespace morph
