#include "morph/adain.hpp"

#include <fmt/format.h>
#include <stdexcept>

#include "morph/errors.hpp"

namespace morph {

void StatTrack::add(int t, const Tensor& latent, bool keep_latent) {
  stats[t] = channel_stats(latent);
  if (keep_latent) latents[t] = latent;
}

const ChannelStats& StatTrack::at(int t) const {
  auto it = stats.find(t);
  if (it == stats.end()) throw MissingCacheError(fmt::format("no style statistics tracked at t={}", t));
  return it->second;
}

ChannelStats interp_stats(const DualStyleTrack& track, double alpha, int t) {
  if (!track.style0 || !track.style1) throw MissingCacheError("style statistic track not attached");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument(fmt::format("alpha {} outside [0,1]", alpha));
  if (track.blend == StatBlend::latents) {
    auto latent = [&](const StatTrack& s) -> const Tensor& {
      auto it = s.latents.find(t);
      if (it == s.latents.end()) throw MissingCacheError(fmt::format("no style latent tracked at t={}", t));
      return it->second;
    };
    return channel_stats(lerp(latent(*track.style0), latent(*track.style1), alpha));
  }
  const ChannelStats& a = track.style0->at(t);
  const ChannelStats& b = track.style1->at(t);
  if (a.channels() != b.channels()) throw std::invalid_argument("style statistics differ in channel count");
  return ChannelStats{lerp(a.mean, b.mean, alpha), lerp(a.std, b.std, alpha)};
}

Tensor adain_modulate(const Tensor& content, const ChannelStats& target, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("adain epsilon must be positive");
  const ChannelStats own = channel_stats(content);
  if (own.channels() != target.channels()) {
    throw std::invalid_argument(fmt::format("adain: latent has {} channels, target stats have {}", own.channels(),
                                            target.channels()));
  }
  const std::size_t plane = content.dim(1) * content.dim(2);
  Tensor out(content.shape());
  for (std::size_t c = 0; c < own.channels(); ++c) {
    const double gain = target.std[c] / (own.std[c] + eps);
    for (std::size_t p = 0; p < plane; ++p) {
      const std::size_t i = c * plane + p;
      out[i] = gain * (content[i] - own.mean[c]) + target.mean[c];
    }
  }
  return out;
}

Tensor apply_adain_in_loop(const Tensor& content, const DualStyleTrack& track, double alpha, int t, int t_a,
                           double eps) {
  if (t < t_a) return content;
  return adain_modulate(content, interp_stats(track, alpha, t), eps);
}

}  // namespace morph
