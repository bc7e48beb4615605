#include <doctest.h>

#include <stdexcept>

#include <filesystem>

#include "morph/attention_injection.hpp"
#include "morph/errors.hpp"
#include "morph/pipeline.hpp"
#include "morph/synthetic.hpp"
#include "test_util.hpp"

using namespace morph;
using morph::testing::hash_tensor;
using morph::testing::max_abs_diff;
using morph::testing::random_tensor;

namespace {

struct Fixture {
  MorphPipeline pipeline{MorphConfig{}};
  std::vector<Tensor> video = synthetic::moving_shapes(3, 16, 16);
  VideoInversion content = pipeline.invert_video(video);
  StyleInversion s0 = pipeline.invert_style(synthetic::style_image(synthetic::Pattern::warm_stripes, 16, 16),
                                            CacheSource::style0);
  StyleInversion s1 = pipeline.invert_style(synthetic::style_image(synthetic::Pattern::cool_checker, 16, 16),
                                            CacheSource::style1);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_CASE("inversion fills the cache for every layer, step and frame") {
  const Fixture& f = fixture();
  CHECK(f.content.cache.size() == 2 * 50 * 3);
  CHECK(f.content.cache.complete({0, 1}, 50, 3));
  CHECK(f.s0.cache.size() == 2 * 50 * 1);
  CHECK(f.s0.cache.frame_count() == 1);
  for (const auto& [key, entry] : f.content.cache.entries()) {
    CHECK(entry->k.dim(0) == 3 * entry->q.dim(0));
    CHECK(entry->v.dim(0) == 3 * entry->q.dim(0));
  }
}

TEST_CASE("inversion is reproducible bit for bit") {
  const Fixture& f = fixture();
  const VideoInversion again = f.pipeline.invert_video(f.video);
  REQUIRE(again.cache.size() == f.content.cache.size());
  for (const auto& [key, entry] : f.content.cache.entries()) {
    CHECK(*entry == again.cache.at(key.layer, key.step, key.frame));
  }
  CHECK(again.noise == f.content.noise);
}

TEST_CASE("cache entries are write-once") {
  AttentionCache cache;
  cache.insert(0, 0, 0, QKV{Tensor({1, 1}), Tensor({1, 1}), Tensor({1, 1})});
  CHECK_THROWS_AS(cache.insert(0, 0, 0, QKV{}), std::logic_error);
  CHECK_THROWS_AS(cache.at(1, 0, 0), MissingCacheError);
}

TEST_CASE("record_pass rejects layers the backend lacks") {
  const Fixture& f = fixture();
  AttentionCache cache;
  CHECK_THROWS_AS(record_pass(f.pipeline.backend(), f.content.clean, 0, 0, {0, 2}, cache), ConfigError);
}

TEST_CASE("interpolate_kv endpoints and identical caches") {
  const Fixture& f = fixture();
  for (int step : {0, 17, 49}) {
    const QKV& a = f.s0.cache.at(1, step, 0);
    const QKV& b = f.s1.cache.at(1, step, 0);
    auto [k0, v0] = interpolate_kv(f.s0.cache, f.s1.cache, 0.0, 1, step);
    CHECK(k0 == a.k);
    CHECK(v0 == a.v);
    auto [k1, v1] = interpolate_kv(f.s0.cache, f.s1.cache, 1.0, 1, step);
    CHECK(k1 == b.k);
    CHECK(v1 == b.v);
    for (double alpha : {0.2, 0.5, 0.8}) {
      auto [ks, vs] = interpolate_kv(f.s0.cache, f.s0.cache, alpha, 1, step);
      CHECK(ks == a.k);
      CHECK(vs == a.v);
    }
    auto [km, vm] = interpolate_kv(f.s0.cache, f.s1.cache, 0.5, 1, step);
    Tensor line_k(a.k.shape());
    for (std::size_t i = 0; i < line_k.size(); ++i) line_k[i] = 0.5 * a.k[i] + 0.5 * b.k[i];
    CHECK(max_abs_diff(km, line_k) <= 1e-12);
  }
}

TEST_CASE("interpolate_kv rejects mismatched caches") {
  AttentionCache a(CacheSource::style0), b(CacheSource::style1);
  a.insert(0, 0, 0, QKV{Tensor({1, 2}), Tensor({3, 2}), Tensor({3, 2})});
  b.insert(0, 0, 0, QKV{Tensor({1, 2}), Tensor({6, 2}), Tensor({6, 2})});
  CHECK_THROWS_AS(interpolate_kv(a, b, 0.5, 0, 0), std::invalid_argument);
}

TEST_CASE("query injection follows the t_Qend threshold") {
  const Fixture& f = fixture();
  const NoiseSchedule& sched = f.pipeline.schedule();
  for (int q_end : {0, 100, 200, 300}) {
    const InjectionPlan plan{{0, 1}, q_end, {0.0, 0.5, 1.0}};
    int overridden = 0;
    int expected = 0;
    for (int k = 0; k < sched.sampling_steps(); ++k) {
      const int t = sched.timesteps()[static_cast<std::size_t>(k)];
      const AttentionHooks hooks = build_hooks(plan, f.content.cache, f.s0.cache, f.s1.cache, k, t);
      const bool q = hooks.layers.at(0).frames.at(1).q.has_value();
      overridden += q ? 1 : 0;
      expected += t >= q_end ? 1 : 0;
      for (int layer : {0, 1}) {
        for (std::size_t fr = 0; fr < 3; ++fr) {
          const FrameOverride& o = hooks.layers.at(layer).frames.at(fr);
          CHECK(o.k.has_value());
          CHECK(o.q.has_value() == q);
          if (q) CHECK(*o.q == f.content.cache.at(layer, k, fr).q);
        }
      }
    }
    CHECK(overridden == expected);
    if (q_end == 0) CHECK(overridden == 50);
  }
}

TEST_CASE("build_hooks reports the missing entry") {
  const Fixture& f = fixture();
  AttentionCache partial(CacheSource::content);
  const InjectionPlan plan{{0}, 0, {0.0, 0.5, 1.0}};
  try {
    build_hooks(plan, partial, f.s0.cache, f.s1.cache, 3, 920);
    FAIL("expected MissingCacheError");
  } catch (const MissingCacheError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("layer 0") != std::string::npos);
    CHECK(msg.find("t=920") != std::string::npos);
    CHECK(msg.find("frame 0") != std::string::npos);
  }
}

TEST_CASE("denoising leaves every cache untouched") {
  const Fixture& f = fixture();
  auto digest = [](const AttentionCache& c) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& [key, e] : c.entries()) h = hash_tensor(e->v, hash_tensor(e->k, hash_tensor(e->q, h)));
    return h;
  };
  const auto before = std::array{digest(f.content.cache), digest(f.s0.cache), digest(f.s1.cache)};
  f.pipeline.denoise(f.content.noise, f.content.cache, {&f.s0.cache, &f.s0.track}, {&f.s1.cache, &f.s1.track},
                     AlphaSchedule::linear(3));
  const auto after = std::array{digest(f.content.cache), digest(f.s0.cache), digest(f.s1.cache)};
  CHECK(before == after);
}

TEST_CASE("cache spill round trip") {
  const Fixture& f = fixture();
  const auto dir = std::filesystem::temp_directory_path() / "morph_cache_spill_test";
  std::filesystem::remove_all(dir);
  spill_cache(f.content.cache, dir);
  const AttentionCache loaded = load_cache(dir, CacheSource::content);
  REQUIRE(loaded.size() == f.content.cache.size());
  for (const auto& [key, e] : f.content.cache.entries()) {
    const QKV& l = loaded.at(key.layer, key.step, key.frame);
    CHECK(max_abs_diff(l.q, e->q) <= 1e-6 * (1.0 + l2_norm(e->q)));
    CHECK(max_abs_diff(l.k, e->k) <= 1e-6 * (1.0 + l2_norm(e->k)));
  }
  const auto dir2 = dir.string() + "_again";
  std::filesystem::remove_all(dir2);
  spill_cache(loaded, dir2);
  const AttentionCache reloaded = load_cache(dir2, CacheSource::content);
  for (const auto& [key, e] : loaded.entries()) CHECK(*e == reloaded.at(key.layer, key.step, key.frame));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}
