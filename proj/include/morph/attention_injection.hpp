#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "morph/noise_schedule.hpp"
#include "morph/toy_backend.hpp"

namespace morph {

enum class CacheSource { content, style0, style1 };

const char* to_string(CacheSource source);

/// Write-once store of recorded attention inputs keyed by
/// (layer, denoising step index, frame). Entries are immutable once inserted.
class AttentionCache {
 public:
  struct Key {
    int layer = 0;
    int step = 0;
    std::size_t frame = 0;
    auto operator<=>(const Key&) const = default;
  };

  explicit AttentionCache(CacheSource source = CacheSource::content) : source_(source) {}

  CacheSource source() const { return source_; }
  void set_source(CacheSource source) { source_ = source; }

  /// Throws std::logic_error if the key was already written.
  void insert(int layer, int step, std::size_t frame, QKV entry);

  const QKV* find(int layer, int step, std::size_t frame) const;
  /// Throws MissingCacheError naming the key.
  const QKV& at(int layer, int step, std::size_t frame) const;

  std::size_t size() const { return entries_.size(); }
  /// One past the largest recorded frame index.
  std::size_t frame_count() const { return frames_; }
  bool complete(const std::vector<int>& layers, int steps, std::size_t frames) const;

  const std::map<Key, std::shared_ptr<const QKV>>& entries() const { return entries_; }

 private:
  CacheSource source_;
  std::size_t frames_ = 0;
  std::map<Key, std::shared_ptr<const QKV>> entries_;
};

/// Runs one noise prediction with record hooks on `layers` and stores copies of
/// every recorded Q/K/V under `step`. Returns the predicted noise.
LatentSequence record_pass(const ToyDenoiser& backend, const LatentSequence& latents, int t, int step,
                           const std::vector<int>& layers, AttentionCache& cache);

/// Frame index used to read a style cache: single-frame caches broadcast.
std::size_t style_frame(const AttentionCache& style, std::size_t frame);

/// Blended keys and values, alpha weighting style1.
std::pair<Tensor, Tensor> interpolate_kv(const AttentionCache& style0, const AttentionCache& style1, double alpha,
                                         int layer, int step, std::size_t frame = 0);

struct InjectionPlan {
  std::vector<int> layers;
  /// Source queries are injected at every timestep t >= query_end.
  int query_end = 0;
  /// Per-frame interpolation coefficients.
  std::vector<double> alphas;

  void validate(int train_steps) const;
};

/// Override for a single frame at denoising step `step` (timestep t).
FrameOverride build_frame_override(const InjectionPlan& plan, const AttentionCache& content,
                                   const AttentionCache& style0, const AttentionCache& style1, int layer,
                                   std::size_t frame, int step, int t);

/// Override hooks for every frame in the plan on every injection layer.
AttentionHooks build_hooks(const InjectionPlan& plan, const AttentionCache& content, const AttentionCache& style0,
                           const AttentionCache& style1, int step, int t);

/// Writes three tensor files per (layer, step): <dir>/layer<L>_step<SS>_{q,k,v}.stns,
/// each stacked over frames as [F, rows, cols]. Values are stored as float32.
void spill_cache(const AttentionCache& cache, const std::filesystem::path& dir);
AttentionCache load_cache(const std::filesystem::path& dir, CacheSource source);

}  // namespace morph
