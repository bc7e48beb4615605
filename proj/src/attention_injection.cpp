#include "morph/attention_injection.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <regex>
#include <set>
#include <stdexcept>

#include "morph/errors.hpp"
#include "morph/io.hpp"

namespace morph {

const char* to_string(CacheSource source) {
  switch (source) {
    case CacheSource::content: return "content";
    case CacheSource::style0: return "style0";
    case CacheSource::style1: return "style1";
  }
  return "unknown";
}

void AttentionCache::insert(int layer, int step, std::size_t frame, QKV entry) {
  auto [it, inserted] = entries_.try_emplace(Key{layer, step, frame}, nullptr);
  if (!inserted) {
    throw std::logic_error(fmt::format("attention cache entry (layer {}, step {}, frame {}) already written", layer,
                                       step, frame));
  }
  it->second = std::make_shared<const QKV>(std::move(entry));
  frames_ = std::max(frames_, frame + 1);
}

const QKV* AttentionCache::find(int layer, int step, std::size_t frame) const {
  auto it = entries_.find(Key{layer, step, frame});
  return it == entries_.end() ? nullptr : it->second.get();
}

const QKV& AttentionCache::at(int layer, int step, std::size_t frame) const {
  if (const QKV* e = find(layer, step, frame)) return *e;
  throw MissingCacheError(fmt::format("{} attention cache has no entry for layer {}, step {}, frame {}",
                                      to_string(source_), layer, step, frame));
}

bool AttentionCache::complete(const std::vector<int>& layers, int steps, std::size_t frames) const {
  for (int layer : layers) {
    for (int s = 0; s < steps; ++s) {
      for (std::size_t f = 0; f < frames; ++f) {
        if (!find(layer, s, f)) return false;
      }
    }
  }
  return true;
}

LatentSequence record_pass(const ToyDenoiser& backend, const LatentSequence& latents, int t, int step,
                           const std::vector<int>& layers, AttentionCache& cache) {
  for (int layer : layers) {
    if (layer < 0 || layer >= backend.num_layers()) {
      throw ConfigError(fmt::format("injection layer {} does not exist (backend has {} attention layers)", layer,
                                    backend.num_layers()));
    }
  }
  AttentionHooks hooks = AttentionHooks::record(layers);
  LatentSequence eps = backend.predict_noise(latents, t, hooks);
  for (auto& [layer, frames] : hooks.recorded) {
    for (std::size_t f = 0; f < frames.size(); ++f) cache.insert(layer, step, f, std::move(frames[f]));
  }
  return eps;
}

std::size_t style_frame(const AttentionCache& style, std::size_t frame) {
  return style.frame_count() == 1 ? 0 : frame;
}

std::pair<Tensor, Tensor> interpolate_kv(const AttentionCache& style0, const AttentionCache& style1, double alpha,
                                         int layer, int step, std::size_t frame) {
  const QKV& a = style0.at(layer, step, style_frame(style0, frame));
  const QKV& b = style1.at(layer, step, style_frame(style1, frame));
  return {lerp(a.k, b.k, alpha), lerp(a.v, b.v, alpha)};
}

void InjectionPlan::validate(int train_steps) const {
  if (query_end < 0 || query_end > train_steps) {
    throw ConfigError(fmt::format("query injection threshold {} outside [0, {}]", query_end, train_steps));
  }
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError(fmt::format("alpha {} outside [0,1]", a));
  }
}

FrameOverride build_frame_override(const InjectionPlan& plan, const AttentionCache& content,
                                   const AttentionCache& style0, const AttentionCache& style1, int layer,
                                   std::size_t frame, int step, int t) {
  auto require = [&](const AttentionCache& cache, std::size_t f) -> const QKV& {
    if (const QKV* e = cache.find(layer, step, f)) return *e;
    throw MissingCacheError(fmt::format("{} attention cache incomplete at layer {}, t={}, frame {}",
                                        to_string(cache.source()), layer, t, f));
  };
  const QKV& s0 = require(style0, style_frame(style0, frame));
  const QKV& s1 = require(style1, style_frame(style1, frame));
  const double alpha = plan.alphas.at(frame);
  FrameOverride o;
  o.k = lerp(s0.k, s1.k, alpha);
  o.v = lerp(s0.v, s1.v, alpha);
  if (t >= plan.query_end) o.q = require(content, frame).q;
  return o;
}

AttentionHooks build_hooks(const InjectionPlan& plan, const AttentionCache& content, const AttentionCache& style0,
                           const AttentionCache& style1, int step, int t) {
  AttentionHooks hooks;
  for (int layer : plan.layers) {
    LayerHook& hook = hooks.layers[layer];
    hook.mode = HookMode::override;
    hook.frames.reserve(plan.alphas.size());
    for (std::size_t f = 0; f < plan.alphas.size(); ++f) {
      hook.frames.push_back(build_frame_override(plan, content, style0, style1, layer, f, step, t));
    }
  }
  return hooks;
}

namespace {

Tensor stack(const std::vector<const Tensor*>& parts) {
  const Shape& inner = parts.front()->shape();
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  std::vector<double> data;
  data.reserve(shape_size(shape));
  for (const Tensor* p : parts) {
    if (p->shape() != inner) throw std::invalid_argument("spill_cache: frames disagree in tensor shape");
    data.insert(data.end(), p->data().begin(), p->data().end());
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor unstack(const Tensor& stacked, std::size_t index) {
  Shape inner(stacked.shape().begin() + 1, stacked.shape().end());
  const std::size_t n = shape_size(inner);
  auto first = stacked.values().begin() + static_cast<std::ptrdiff_t>(index * n);
  return Tensor(std::move(inner), std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n)));
}

}  // namespace

void spill_cache(const AttentionCache& cache, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::set<std::pair<int, int>> slots;
  for (const auto& [key, _] : cache.entries()) slots.insert({key.layer, key.step});
  for (const auto& [layer, step] : slots) {
    std::vector<const Tensor*> q, k, v;
    for (std::size_t f = 0; f < cache.frame_count(); ++f) {
      const QKV& e = cache.at(layer, step, f);
      q.push_back(&e.q);
      k.push_back(&e.k);
      v.push_back(&e.v);
    }
    const std::string stem = fmt::format("layer{}_step{:02}_", layer, step);
    write_tensor(dir / (stem + "q.stns"), stack(q));
    write_tensor(dir / (stem + "k.stns"), stack(k));
    write_tensor(dir / (stem + "v.stns"), stack(v));
  }
}

AttentionCache load_cache(const std::filesystem::path& dir, CacheSource source) {
  if (!std::filesystem::is_directory(dir)) throw MissingFileError("cache directory not found: " + dir.string());
  static const std::regex name(R"(layer(\d+)_step(\d+)_q\.stns)");
  AttentionCache cache(source);
  std::vector<std::filesystem::path> queries;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (std::regex_match(entry.path().filename().string(), name)) queries.push_back(entry.path());
  }
  std::sort(queries.begin(), queries.end());
  for (const auto& qpath : queries) {
    std::smatch m;
    const std::string file = qpath.filename().string();
    std::regex_match(file, m, name);
    const int layer = std::stoi(m[1]);
    const int step = std::stoi(m[2]);
    const std::string stem = file.substr(0, file.size() - std::string("q.stns").size());
    Tensor q = read_tensor(qpath);
    Tensor k = read_tensor(dir / (stem + "k.stns"));
    Tensor v = read_tensor(dir / (stem + "v.stns"));
    if (q.rank() < 2 || k.dim(0) != q.dim(0) || v.dim(0) != q.dim(0)) {
      throw FormatError("cache spill " + stem + "* disagrees in frame count");
    }
    for (std::size_t f = 0; f < q.dim(0); ++f) cache.insert(layer, step, f, QKV{unstack(q, f), unstack(k, f), unstack(v, f)});
  }
  return cache;
}

}  // namespace morph
