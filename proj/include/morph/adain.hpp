#pragma once

#include <map>

#include "morph/tensor.hpp"

namespace morph {

inline constexpr double kAdainEpsilon = 1e-5;

/// Channel statistics of one style latent along its inversion trajectory,
/// keyed by timestep. Optionally keeps the latents themselves for the
/// latent-blend path.
struct StatTrack {
  std::map<int, ChannelStats> stats;
  std::map<int, Tensor> latents;

  void add(int t, const Tensor& latent, bool keep_latent);
  bool tracks(int t) const { return stats.contains(t); }
  const ChannelStats& at(int t) const;
  std::size_t size() const { return stats.size(); }
};

/// How the two styles are combined before modulation.
enum class StatBlend {
  /// Interpolate the per-style mean and std directly.
  statistics,
  /// Interpolate the style latents, then take their statistics.
  latents,
};

struct DualStyleTrack {
  const StatTrack* style0 = nullptr;
  const StatTrack* style1 = nullptr;
  StatBlend blend = StatBlend::statistics;
};

/// mu = lerp(mu0, mu1, alpha), sigma = lerp(sigma0, sigma1, alpha).
ChannelStats interp_stats(const DualStyleTrack& track, double alpha, int t);

/// sigma_s * (z - mu(z)) / (sigma(z) + eps) + mu_s, per channel of a [C,H,W] latent.
Tensor adain_modulate(const Tensor& content, const ChannelStats& target, double eps = kAdainEpsilon);

/// Modulates when t >= t_a, otherwise returns the latent unchanged.
Tensor apply_adain_in_loop(const Tensor& content, const DualStyleTrack& track, double alpha, int t, int t_a,
                           double eps = kAdainEpsilon);

}  // namespace morph
