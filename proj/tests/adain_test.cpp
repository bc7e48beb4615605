#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "morph/adain.hpp"
#include "morph/errors.hpp"
#include "morph/noise_schedule.hpp"
#include "test_util.hpp"

using namespace morph;
using morph::testing::max_abs_diff;
using morph::testing::random_tensor;

namespace {

StatTrack track_of(double mean, double std, int t) {
  StatTrack s;
  s.stats[t] = ChannelStats{{mean}, {std}};
  return s;
}

}  // namespace

TEST_CASE("interp_stats endpoints and midpoint") {
  const StatTrack a = track_of(1.0, 0.5, 400), b = track_of(3.0, 2.0, 400);
  const DualStyleTrack track{&a, &b};
  CHECK(interp_stats(track, 0.0, 400) == a.at(400));
  CHECK(interp_stats(track, 1.0, 400) == b.at(400));
  const ChannelStats mid = interp_stats(track, 0.5, 400);
  CHECK(mid.mean[0] == 2.0);
  CHECK(mid.std[0] == 1.25);
  CHECK_THROWS_AS(interp_stats(track, 0.5, 380), MissingCacheError);
}

TEST_CASE("interp_stats is monotone and non-negative in alpha") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const StatTrack a = track_of(u(rng) - 1.5, u(rng), 0), b = track_of(u(rng) - 1.5, u(rng), 0);
    const DualStyleTrack track{&a, &b};
    double prev_mean = interp_stats(track, 0.0, 0).mean[0];
    double prev_std = interp_stats(track, 0.0, 0).std[0];
    const double dir_mean = b.at(0).mean[0] - a.at(0).mean[0];
    const double dir_std = b.at(0).std[0] - a.at(0).std[0];
    for (int i = 1; i <= 20; ++i) {
      const ChannelStats s = interp_stats(track, i / 20.0, 0);
      CHECK(s.std[0] >= 0.0);
      CHECK((s.mean[0] - prev_mean) * dir_mean >= 0.0);
      CHECK((s.std[0] - prev_std) * dir_std >= 0.0);
      prev_mean = s.mean[0];
      prev_std = s.std[0];
    }
  }
}

TEST_CASE("latent blend derives statistics from interpolated latents") {
  std::mt19937_64 rng(5);
  StatTrack a, b;
  const Tensor za = random_tensor(rng, {2, 3, 3}), zb = random_tensor(rng, {2, 3, 3}, 1.0, 4.0);
  a.add(600, za, true);
  b.add(600, zb, true);
  const DualStyleTrack track{&a, &b, StatBlend::latents};
  CHECK(interp_stats(track, 0.3, 600) == channel_stats(lerp(za, zb, 0.3)));
  CHECK(interp_stats(track, 0.0, 600) == a.at(600));
}

TEST_CASE("adain_modulate forced case") {
  const Tensor z({1, 2, 2}, {-1.0, 1.0, -1.0, 1.0});
  const Tensor out = adain_modulate(z, ChannelStats{{2.0}, {3.0}}, 1e-5);
  const ChannelStats s = channel_stats(out);
  CHECK(std::abs(s.mean[0] - 2.0) <= 1e-12);
  CHECK(std::abs(s.std[0] - 3.0 / (1.0 + 1e-5)) <= 1e-12);
}

TEST_CASE("adain_modulate on a constant channel yields the target mean") {
  const Tensor z({2, 2, 2}, {4, 4, 4, 4, 1, 2, 3, 4});
  const Tensor out = adain_modulate(z, ChannelStats{{-0.5, 0.0}, {2.0, 1.0}});
  for (std::size_t p = 0; p < 4; ++p) CHECK(out[p] == -0.5);
}

TEST_CASE("adain_modulate against the latent's own statistics is near identity") {
  std::mt19937_64 rng(6);
  const double eps = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor z = random_tensor(rng, {4, 5, 5});
    const ChannelStats own = channel_stats(z);
    const Tensor out = adain_modulate(z, own, eps);
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t p = 0; p < 25; ++p) {
        const std::size_t i = c * 25 + p;
        CHECK(std::abs(out[i] - z[i]) <= 2.0 * eps / own.std[c] * (std::abs(z[i]) + std::abs(own.mean[c])));
      }
    }
  }
}

TEST_CASE("adain_modulate twice changes little") {
  std::mt19937_64 rng(7);
  const double eps = 1e-5;
  const ChannelStats target{{0.3, -1.0}, {1.5, 0.8}};
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor z = random_tensor(rng, {2, 6, 6}, -2, 2);
    const Tensor once = adain_modulate(z, target, eps);
    const Tensor twice = adain_modulate(once, target, eps);
    const ChannelStats own = channel_stats(z);
    for (std::size_t c = 0; c < 2; ++c) {
      // Relative change is eps/sigma(z) + eps/sigma_s to first order; <= 2 eps/sigma_s when sigma(z) >= sigma_s.
      const double rel = 1.01 * (eps / own.std[c] + eps / target.std[c]);
      for (std::size_t p = 0; p < 36; ++p) {
        const std::size_t i = c * 36 + p;
        const double scale = std::abs(once[i] - target.mean[c]);
        CHECK(std::abs(twice[i] - once[i]) <= rel * scale + 1e-15);
      }
    }
  }
}

TEST_CASE("adain_modulate removes positive affine transforms of the input") {
  std::mt19937_64 rng(8);
  const ChannelStats target{{1.0, 2.0, -3.0}, {0.5, 1.0, 2.0}};
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor z = random_tensor(rng, {3, 4, 4});
    const double s = 0.5 + trial * 0.25, m = trial - 10.0;
    Tensor y(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i) y[i] = s * z[i] + m;
    CHECK(max_abs_diff(adain_modulate(y, target, 1e-14), adain_modulate(z, target, 1e-14)) <= 1e-10);
    CHECK(max_abs_diff(adain_modulate(y, target, 1e-5), adain_modulate(z, target, 1e-5)) <= 1e-3);
  }
}

TEST_CASE("adain_modulate validates its inputs") {
  CHECK_THROWS_AS(adain_modulate(Tensor({1, 2, 2}), ChannelStats{{0}, {1}}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(adain_modulate(Tensor({2, 2, 2}), ChannelStats{{0}, {1}}), std::invalid_argument);
}

TEST_CASE("modulation happens exactly on schedule steps with t >= t_A") {
  const NoiseSchedule sched = build_schedule(1000, 50);
  StatTrack a, b;
  std::mt19937_64 rng(9);
  for (int t : sched.timesteps()) {
    a.add(t, random_tensor(rng, {2, 2, 2}), false);
    b.add(t, random_tensor(rng, {2, 2, 2}), false);
  }
  const DualStyleTrack track{&a, &b};
  const Tensor z = random_tensor(rng, {2, 2, 2});
  int modulated = 0;
  for (int t : sched.timesteps()) {
    if (!(apply_adain_in_loop(z, track, 0.4, t, 400) == z)) ++modulated;
  }
  CHECK(modulated == 30);
  int none = 0;
  for (int t : sched.timesteps()) {
    if (!(apply_adain_in_loop(z, track, 0.4, t, 1001) == z)) ++none;
  }
  CHECK(none == 0);
}
