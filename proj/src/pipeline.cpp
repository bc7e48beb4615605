#include "morph/pipeline.hpp"

#include <chrono>
#include <fmt/format.h>
#include <stdexcept>

#include "morph/errors.hpp"

namespace morph {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_images(const std::vector<Tensor>& images, std::size_t multiple, const char* what) {
  if (images.empty()) throw std::invalid_argument(fmt::format("{}: no frames", what));
  const Shape& shape = images.front().shape();
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Shape& s = images[i].shape();
    if (s.size() != 3 || s[0] != 3) throw std::invalid_argument(fmt::format("{}: frame {} is not [3,H,W]", what, i));
    if (s != shape) throw std::invalid_argument(fmt::format("{}: frame {} differs in size from frame 0", what, i));
    if (s[1] % multiple != 0 || s[2] % multiple != 0) {
      throw std::invalid_argument(
          fmt::format("{}: frame dims {}x{} must be divisible by {}", what, s[1], s[2], multiple));
    }
  }
}

void check_finite(const LatentSequence& z, int step, int t) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!z[i].all_finite()) {
      throw NumericError(fmt::format("non-finite latent at step {} (t={}), frame {}", step, t, i));
    }
  }
}

}  // namespace

MorphPipeline::MorphPipeline(MorphConfig config)
    : config_(std::move(config)),
      schedule_(config_.train_steps, config_.steps),
      backend_(BackendOptions{.seed = config_.seed, .train_steps = config_.train_steps}),
      features_(config_.feature_seed) {
  config_.validate();
  for (int layer : config_.injection_layers) {
    if (layer >= backend_.num_layers()) {
      throw ConfigError(fmt::format("injection layer {} does not exist (backend has {} attention layers)", layer,
                                    backend_.num_layers()));
    }
  }
}

VideoInversion MorphPipeline::invert_video(const std::vector<Tensor>& frames) const {
  check_images(frames, Codec::kFactor * backend_.options().pool, "invert_video");
  VideoInversion out;
  for (const auto& f : frames) out.clean.push_back(Codec::encode(f));
  LatentSequence z = out.clean;
  const auto& ts = schedule_.timesteps();
  for (int k = schedule_.sampling_steps() - 1; k >= 0; --k) {
    const int t = ts[static_cast<std::size_t>(k)];
    const int t_prev = schedule_.previous_timestep(k);
    const LatentSequence eps = record_pass(backend_, z, t, k, config_.injection_layers, out.cache);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = ddim_invert_step(z[i], eps[i], t_prev, t, schedule_);
    check_finite(z, k, t);
  }
  out.noise = std::move(z);
  return out;
}

StyleInversion MorphPipeline::invert_style(const Tensor& image, CacheSource source) const {
  check_images({image}, Codec::kFactor * backend_.options().pool, "invert_style");
  StyleInversion out{Codec::encode(image), Tensor{}, AttentionCache(source), StatTrack{}};
  LatentSequence z{out.clean};
  const auto& ts = schedule_.timesteps();
  for (int k = schedule_.sampling_steps() - 1; k >= 0; --k) {
    const int t = ts[static_cast<std::size_t>(k)];
    const int t_prev = schedule_.previous_timestep(k);
    const LatentSequence eps = record_pass(backend_, z, t, k, config_.injection_layers, out.cache);
    z[0] = ddim_invert_step(z[0], eps[0], t_prev, t, schedule_);
    check_finite(z, k, t);
    if (t >= config_.t_a) out.track.add(t, z[0], config_.latent_blend);
  }
  out.noise = std::move(z[0]);
  return out;
}

LatentSequence MorphPipeline::denoise(const LatentSequence& noise, const AttentionCache& content,
                                      const StyleBranch& style0, const StyleBranch& style1,
                                      const AlphaSchedule& alphas) const {
  return denoise(noise, content, style0, style1, alphas, schedule_.sampling_steps());
}

LatentSequence MorphPipeline::denoise(const LatentSequence& noise, const AttentionCache& content,
                                      const StyleBranch& style0, const StyleBranch& style1,
                                      const AlphaSchedule& alphas, int step_limit) const {
  const int steps = schedule_.sampling_steps();
  if (step_limit < 1 || step_limit > steps) {
    throw std::invalid_argument(fmt::format("denoise: step limit {} outside [1, {}]", step_limit, steps));
  }
  if (alphas.size() != noise.size()) {
    throw std::invalid_argument(fmt::format("denoise: {} alphas for {} frames", alphas.size(), noise.size()));
  }
  if (!style0.cache || !style1.cache) throw MissingCacheError("denoise: style attention cache not attached");
  const InjectionPlan plan{config_.injection_layers, config_.t_qend, alphas.values()};
  plan.validate(config_.train_steps);
  const DualStyleTrack stats{style0.track, style1.track,
                             config_.latent_blend ? StatBlend::latents : StatBlend::statistics};

  LatentSequence z = noise;
  const auto& ts = schedule_.timesteps();
  for (int k = 0; k < step_limit; ++k) {
    const int t = ts[static_cast<std::size_t>(k)];
    try {
      if (config_.adain_enabled() && t >= config_.t_a) {
        for (std::size_t i = 0; i < z.size(); ++i) {
          z[i] = apply_adain_in_loop(z[i], stats, alphas[i], t, config_.t_a, config_.eps);
        }
      }
      AttentionHooks hooks = build_hooks(plan, content, *style0.cache, *style1.cache, k, t);
      const LatentSequence eps = backend_.predict_noise(z, t, hooks);
      const bool truncated = k == step_limit - 1 && step_limit < steps;
      for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = truncated ? predict_z0(z[i], eps[i], t, schedule_)
                         : ddim_denoise_step(z[i], eps[i], t, schedule_.previous_timestep(k), schedule_);
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(fmt::format("denoise step {} (t={}): {}", k, t, e.what()));
    }
    check_finite(z, k, t);
  }
  return z;
}

LatentSequence MorphPipeline::reconstruct(const LatentSequence& noise) const {
  LatentSequence z = noise;
  const auto& ts = schedule_.timesteps();
  for (int k = 0; k < schedule_.sampling_steps(); ++k) {
    const int t = ts[static_cast<std::size_t>(k)];
    const LatentSequence eps = backend_.predict_noise(z, t);
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] = ddim_denoise_step(z[i], eps[i], t, schedule_.previous_timestep(k), schedule_);
    }
    check_finite(z, k, t);
  }
  return z;
}

std::vector<Tensor> MorphPipeline::presample(const VideoInversion& content, const StyleInversion& style0,
                                             const StyleInversion& style1, const AlphaSchedule& alphas) const {
  const LatentSequence z0 = denoise(content.noise, content.cache, {&style0.cache, &style0.track},
                                    {&style1.cache, &style1.track}, alphas, config_.presample_steps);
  return decode_all(z0);
}

DistanceCurves MorphPipeline::distance_curves(const std::vector<Tensor>& frames, const Tensor& style0,
                                              const Tensor& style1) const {
  const FeaturePyramid f0 = features_.extract(style0);
  const FeaturePyramid f1 = features_.extract(style1);
  DistanceCurves curves;
  for (const auto& frame : frames) {
    const FeaturePyramid f = features_.extract(frame);
    curves.d0.push_back(style_distance(f, f0));
    curves.d1.push_back(style_distance(f, f1));
  }
  return curves;
}

MorphRun MorphPipeline::morph(const std::vector<Tensor>& video, const Tensor& style0, const Tensor& style1) const {
  const auto start = Clock::now();
  std::vector<Tensor> frames = video;
  if (config_.frames > 0) {
    if (static_cast<std::size_t>(config_.frames) > video.size()) {
      throw ConfigError(fmt::format("config asks for {} frames but the video has {}", config_.frames, video.size()));
    }
    frames.resize(static_cast<std::size_t>(config_.frames));
  }
  MorphRun run;
  run.content = invert_video(frames);
  run.style0 = invert_style(style0, CacheSource::style0);
  run.style1 = invert_style(style1, CacheSource::style1);
  run.timings.inversion_s = seconds_since(start);

  const std::size_t n = frames.size();
  run.schedule = AlphaSchedule::linear(n);
  if (config_.asdm_enabled && n >= 2) {
    const auto pre_start = Clock::now();
    run.presampled = presample(run.content, run.style0, run.style1, run.schedule);
    run.curves = distance_curves(run.presampled, style0, style1);
    run.alpha_mid = find_alpha_mid(run.curves);
    run.timings.presample_s = seconds_since(pre_start);
    run.schedule = build_alpha_schedule(n, run.alpha_mid, config_.lambda_alpha);
  }
  run.s_max = smax(run.alpha_mid, config_.asdm_enabled ? config_.lambda_alpha : 0.0);

  const auto denoise_start = Clock::now();
  const LatentSequence z0 = denoise(run.content.noise, run.content.cache, {&run.style0.cache, &run.style0.track},
                                    {&run.style1.cache, &run.style1.track}, run.schedule);
  run.frames = decode_all(z0);
  run.timings.denoise_s = seconds_since(denoise_start);
  run.timings.total_s = seconds_since(start);
  return run;
}

Tensor initial_latent_interp(const Tensor& z0, const Tensor& z1, double alpha) { return lerp(z0, z1, alpha); }

std::vector<Tensor> decode_all(const LatentSequence& latents) {
  std::vector<Tensor> out;
  out.reserve(latents.size());
  for (const auto& z : latents) out.push_back(Codec::decode(z));
  return out;
}

}  // namespace morph
