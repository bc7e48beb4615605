#include "morph/toy_backend.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace morph {

namespace {

constexpr std::size_t kColors = 3;
constexpr std::size_t kLatent = Codec::kLatentChannels;

std::array<double, kLatent * kLatent> make_dct() {
  std::array<double, kLatent * kLatent> m{};
  const double n = static_cast<double>(kLatent);
  for (std::size_t k = 0; k < kLatent; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < kLatent; ++i) {
      m[k * kLatent + i] = s * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) * static_cast<double>(k) / n);
    }
  }
  return m;
}

Tensor gaussian(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor w({rows, cols});
  for (double& x : w.data()) x = dist(rng);
  return w;
}

// Latent [C,h,w] -> tokens [h*w, C].
Tensor to_tokens(const Tensor& z) {
  const std::size_t c = z.dim(0), plane = z.dim(1) * z.dim(2);
  Tensor out({plane, c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < plane; ++p) out.at(p, ch) = z[ch * plane + p];
  }
  return out;
}

Tensor from_tokens(const Tensor& tokens, std::size_t h, std::size_t w) {
  const std::size_t c = tokens.dim(1), plane = h * w;
  Tensor out({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < plane; ++p) out[ch * plane + p] = tokens.at(p, ch);
  }
  return out;
}

Tensor pool_tokens(const Tensor& tokens, std::size_t h, std::size_t w, std::size_t f) {
  const std::size_t ph = h / f, pw = w / f, c = tokens.dim(1);
  Tensor out({ph * pw, c});
  const double inv = 1.0 / static_cast<double>(f * f);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t dst = (y / f) * pw + x / f;
      for (std::size_t ch = 0; ch < c; ++ch) out.at(dst, ch) += tokens.at(y * w + x, ch) * inv;
    }
  }
  return out;
}

void add_upsampled(Tensor& tokens, const Tensor& pooled, std::size_t h, std::size_t w, std::size_t f) {
  const std::size_t pw = w / f, c = tokens.dim(1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t src = (y / f) * pw + x / f;
      for (std::size_t ch = 0; ch < c; ++ch) tokens.at(y * w + x, ch) += pooled.at(src, ch);
    }
  }
}

std::string layer_error(int layer, std::size_t frame, const std::string& what) {
  return "attention layer " + std::to_string(layer) + " frame " + std::to_string(frame) + ": " + what;
}

}  // namespace

const std::array<double, kLatent * kLatent>& Codec::mixing() {
  static const auto m = make_dct();
  return m;
}

Tensor Codec::encode(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != kColors) {
    throw std::invalid_argument("encode expects a [3,H,W] image");
  }
  const std::size_t H = image.dim(1), W = image.dim(2);
  if (H % kFactor != 0 || W % kFactor != 0) {
    throw std::invalid_argument("encode: image dims " + std::to_string(H) + "x" + std::to_string(W) +
                                " must be even");
  }
  const std::size_t h = H / kFactor, w = W / kFactor;
  const auto& m = mixing();
  Tensor out({kLatent, h, w});
  std::array<double, kLatent> cell{};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < kColors; ++c) {
        for (std::size_t dy = 0; dy < kFactor; ++dy) {
          for (std::size_t dx = 0; dx < kFactor; ++dx) {
            cell[c * 4 + dy * 2 + dx] = image.at(c, y * kFactor + dy, x * kFactor + dx);
          }
        }
      }
      for (std::size_t k = 0; k < kLatent; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < kLatent; ++i) acc += m[k * kLatent + i] * cell[i];
        out.at(k, y, x) = acc;
      }
    }
  }
  return out;
}

Tensor Codec::decode(const Tensor& latent) {
  if (latent.rank() != 3 || latent.dim(0) != kLatent) {
    throw std::invalid_argument("decode expects a [12,h,w] latent");
  }
  const std::size_t h = latent.dim(1), w = latent.dim(2);
  const auto& m = mixing();
  Tensor out({kColors, h * kFactor, w * kFactor});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t i = 0; i < kLatent; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kLatent; ++k) acc += m[k * kLatent + i] * latent.at(k, y, x);
        const std::size_t c = i / 4, dy = (i % 4) / 2, dx = i % 2;
        out.at(c, y * kFactor + dy, x * kFactor + dx) = acc;
      }
    }
  }
  return out;
}

AttentionHooks AttentionHooks::record(const std::vector<int>& layer_ids) {
  AttentionHooks hooks;
  for (int id : layer_ids) hooks.layers[id].mode = HookMode::record;
  return hooks;
}

Tensor spectral_normalize(const Tensor& w, int iterations) {
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  std::vector<double> v(cols, 1.0 / std::sqrt(static_cast<double>(cols)));
  std::vector<double> u(rows);
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) acc += w.at(r, c) * v[c];
      u[r] = acc;
    }
    double un = 0.0;
    for (double x : u) un += x * x;
    sigma = std::sqrt(un);
    if (sigma == 0.0) return w;
    for (std::size_t c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r) acc += w.at(r, c) * u[r];
      v[c] = acc;
    }
    double vn = 0.0;
    for (double x : v) vn += x * x;
    vn = std::sqrt(vn);
    if (vn == 0.0) return w;
    for (double& x : v) x /= vn;
  }
  return sigma > 1.0 ? scale(w, 1.0 / sigma) : w;
}

std::vector<double> timestep_features(int t) {
  constexpr std::size_t half = DenoiserWeights::kTimeEmbedding / 2;
  std::vector<double> out(DenoiserWeights::kTimeEmbedding);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    out[i] = std::sin(static_cast<double>(t) * freq);
    out[half + i] = std::cos(static_cast<double>(t) * freq);
  }
  return out;
}

DenoiserWeights DenoiserWeights::generate(const BackendOptions& o) {
  std::mt19937_64 rng(o.seed);
  auto draw = [&](std::size_t r, std::size_t c) { return spectral_normalize(gaussian(rng, r, c)); };
  DenoiserWeights w;
  w.input = scale(draw(kLatent, o.hidden), o.input_gain);
  w.time = draw(kTimeEmbedding, o.hidden);
  for (auto& layer : w.attention) {
    layer.wq = draw(o.hidden, o.head_dim);
    layer.wk = draw(o.hidden, o.head_dim);
    layer.wv = draw(o.hidden, o.head_dim);
    layer.wo = draw(o.head_dim, o.hidden);
  }
  for (auto& m : w.mixing) m = draw(o.hidden, o.hidden);
  w.output = draw(o.hidden, kLatent);
  return w;
}

ToyDenoiser::ToyDenoiser(BackendOptions options)
    : options_(options), weights_(DenoiserWeights::generate(options)) {
  if (options_.pool == 0 || options_.hidden == 0 || options_.head_dim == 0) {
    throw std::invalid_argument("backend dimensions must be positive");
  }
}

LatentSequence ToyDenoiser::predict_noise(const LatentSequence& latents, int t) const {
  AttentionHooks none;
  return predict_noise(latents, t, none);
}

LatentSequence ToyDenoiser::predict_noise(const LatentSequence& latents, int t, AttentionHooks& hooks) const {
  if (latents.empty()) throw std::invalid_argument("predict_noise: empty latent sequence");
  if (t < 0 || t >= options_.train_steps) {
    throw std::invalid_argument("predict_noise: timestep " + std::to_string(t) + " out of range");
  }
  const Shape& shape = latents.front().shape();
  if (shape.size() != 3 || shape[0] != kLatent) throw std::invalid_argument("predict_noise: latents must be [12,h,w]");
  for (const auto& z : latents) {
    if (z.shape() != shape) throw std::invalid_argument("predict_noise: frames differ in shape");
  }
  const std::size_t h = shape[1], w = shape[2], f = options_.pool;
  if (h % f != 0 || w % f != 0) {
    throw std::invalid_argument("predict_noise: latent grid " + std::to_string(h) + "x" + std::to_string(w) +
                                " not divisible by attention pool factor " + std::to_string(f));
  }
  for (const auto& [id, hook] : hooks.layers) {
    if (id < 0 || id >= num_layers()) {
      throw std::invalid_argument("predict_noise: hook for unknown attention layer " + std::to_string(id));
    }
    if (hook.mode == HookMode::override && hook.frames.size() != latents.size()) {
      throw std::invalid_argument("attention layer " + std::to_string(id) + ": override has " +
                                  std::to_string(hook.frames.size()) + " frames, sequence has " +
                                  std::to_string(latents.size()));
    }
  }

  const std::size_t frames = latents.size();
  const auto features = timestep_features(t);
  Tensor time_row = matmul(Tensor({1, DenoiserWeights::kTimeEmbedding}, features), weights_.time);

  std::vector<Tensor> hidden;
  hidden.reserve(frames);
  for (const auto& z : latents) {
    Tensor hid = matmul(to_tokens(z), weights_.input);
    for (std::size_t p = 0; p < hid.dim(0); ++p) {
      for (std::size_t c = 0; c < hid.dim(1); ++c) hid.at(p, c) += time_row[c];
    }
    hidden.push_back(std::move(hid));
  }

  for (int layer = 0; layer < num_layers(); ++layer) {
    const auto& aw = weights_.attention[static_cast<std::size_t>(layer)];
    const auto hook_it = hooks.layers.find(layer);
    const LayerHook* hook = hook_it == hooks.layers.end() ? nullptr : &hook_it->second;

    std::vector<Tensor> q(frames), k(frames), v(frames);
    for (std::size_t i = 0; i < frames; ++i) {
      Tensor pooled = pool_tokens(hidden[i], h, w, f);
      q[i] = matmul(pooled, aw.wq);
      k[i] = matmul(pooled, aw.wk);
      v[i] = matmul(pooled, aw.wv);
    }
    std::vector<QKV> record;
    if (hook && hook->mode == HookMode::record) record.reserve(frames);

    for (std::size_t i = 0; i < frames; ++i) {
      const std::size_t prev = i == 0 ? 0 : i - 1;
      const std::size_t next = i + 1 == frames ? i : i + 1;
      QKV native{q[i], concat_rows({&k[prev], &k[i], &k[next]}), concat_rows({&v[prev], &v[i], &v[next]})};
      const Tensor* qq = &native.q;
      const Tensor* kk = &native.k;
      const Tensor* vv = &native.v;
      if (hook && hook->mode == HookMode::override) {
        const FrameOverride& o = hook->frames[i];
        if (o.q) {
          if (o.q->shape() != native.q.shape()) throw std::invalid_argument(layer_error(layer, i, "query override shape mismatch"));
          qq = &*o.q;
        }
        if (o.k.has_value() != o.v.has_value()) {
          throw std::invalid_argument(layer_error(layer, i, "key and value must be overridden together"));
        }
        if (o.k) {
          if (o.k->rank() != 2 || o.v->rank() != 2 || o.k->dim(1) != native.k.dim(1) ||
              o.v->dim(1) != native.v.dim(1) || o.k->dim(0) != o.v->dim(0)) {
            throw std::invalid_argument(layer_error(layer, i, "key/value override shape mismatch"));
          }
          kk = &*o.k;
          vv = &*o.v;
        }
      }
      Tensor out = matmul(attention(*qq, *kk, *vv), aw.wo);
      add_upsampled(hidden[i], out, h, w, f);
      if (hook && hook->mode == HookMode::record) record.push_back(std::move(native));
    }
    if (hook && hook->mode == HookMode::record) hooks.recorded[layer] = std::move(record);

    const Tensor& mix = weights_.mixing[static_cast<std::size_t>(layer)];
    for (auto& hid : hidden) {
      Tensor pre = matmul(hid, mix);
      for (std::size_t e = 0; e < hid.size(); ++e) hid[e] += std::tanh(pre[e]);
    }
  }

  LatentSequence eps;
  eps.reserve(frames);
  for (const auto& hid : hidden) eps.push_back(from_tokens(matmul(hid, weights_.output), h, w));
  return eps;
}

}  // namespace morph
