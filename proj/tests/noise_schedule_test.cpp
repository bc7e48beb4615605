#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "morph/noise_schedule.hpp"
#include "test_util.hpp"

using namespace morph;
using morph::testing::random_tensor;

namespace {

// Cumulative product of (1 - beta_t) in long double, betas built from scratch.
long double alpha_bar_oracle(int t) {
  const long double lo = std::sqrt(0.00085L), hi = std::sqrt(0.012L);
  long double prod = 1.0L;
  for (int i = 0; i <= t; ++i) {
    const long double root = lo + (hi - lo) * static_cast<long double>(i) / 999.0L;
    prod *= 1.0L - root * root;
  }
  return prod;
}

}  // namespace

TEST_CASE("schedule shape and monotonicity") {
  const NoiseSchedule s = build_schedule(1000, 50);
  REQUIRE(s.sampling_steps() == 50);
  CHECK(s.timesteps().front() == 980);
  CHECK(s.timesteps().back() == 0);
  for (std::size_t i = 1; i < s.timesteps().size(); ++i) CHECK(s.timesteps()[i] < s.timesteps()[i - 1]);
  for (int t = 1; t < 1000; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  for (double b : s.betas()) CHECK((b > 0.0 && b < 1.0));
  CHECK(s.alpha_bar(0) == 1.0 - s.betas()[0]);
  CHECK(s.alpha_bar(kCleanTimestep) == 1.0);
  CHECK(s.previous_timestep(49) == kCleanTimestep);
  CHECK(s.previous_timestep(0) == 960);
}

TEST_CASE("cumulative alpha matches the direct product") {
  const NoiseSchedule s = build_schedule(1000, 50);
  // Frozen from a 30-digit evaluation of the same product.
  CHECK(std::abs(s.alpha_bar(999) - 0.00466009851307724040389766636594) <= 1e-15);
  for (int t : {0, 1, 250, 500, 999}) {
    CHECK(std::abs(s.alpha_bar(t) - static_cast<double>(alpha_bar_oracle(t))) <= 1e-14);
  }
}

TEST_CASE("schedule rejects more sampling steps than train steps") {
  CHECK_THROWS_AS(build_schedule(10, 11), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(0, 0), std::invalid_argument);
  CHECK_NOTHROW(build_schedule(10, 10));
}

TEST_CASE("ddim denoise step special cases") {
  const NoiseSchedule s = build_schedule(1000, 50);
  const Tensor z({2}, {0.3, -1.2});
  const Tensor zero({2});
  const Tensor scaled = ddim_denoise_step(z, zero, 500, 480, s);
  const double factor = std::sqrt(s.alpha_bar(480) / s.alpha_bar(500));
  CHECK(std::abs(scaled[0] - 0.3 * factor) <= 1e-15);
  CHECK(std::abs(scaled[1] + 1.2 * factor) <= 1e-15);

  std::mt19937_64 rng(5);
  const Tensor eps = random_tensor(rng, {2});
  const Tensor same = ddim_transfer(z, eps, 0.4, 0.4);
  CHECK(std::abs(same[0] - z[0]) <= 1e-15);
  CHECK(std::abs(same[1] - z[1]) <= 1e-15);

  CHECK_THROWS_AS(ddim_denoise_step(z, zero, 480, 500, s), std::invalid_argument);
  CHECK_THROWS_AS(ddim_denoise_step(z, zero, 480, 480, s), std::invalid_argument);
  CHECK_THROWS_AS(ddim_invert_step(z, zero, 500, 480, s), std::invalid_argument);
}

TEST_CASE("ddim denoise step hand evaluation") {
  const NoiseSchedule s = build_schedule(1000, 50);
  // 30-digit evaluation of the update for t=500 -> 480.
  const Tensor out = ddim_denoise_step(Tensor({2}, {0.3, -1.2}), Tensor({2}, {0.5, 0.1}), 500, 480, s);
  CHECK(std::abs(out[0] - 0.28582242819359713010336642053) <= 1e-14);
  CHECK(std::abs(out[1] - -1.26374381771494307160653964489) <= 1e-14);
}

TEST_CASE("predict_z0 cases") {
  const NoiseSchedule s = build_schedule(1000, 50);
  const Tensor z({2}, {0.3, -1.2});
  CHECK(predict_z0(z, Tensor({2}), kCleanTimestep, s) == z);

  const double sigma = std::sqrt(1.0 - s.alpha_bar(700));
  const Tensor eps({2}, {0.8, -0.4});
  Tensor cancel({2});
  for (std::size_t i = 0; i < 2; ++i) cancel[i] = sigma * eps[i];
  const Tensor zero = predict_z0(cancel, eps, 700, s);
  CHECK(std::abs(zero[0]) <= 1e-15);
  CHECK(std::abs(zero[1]) <= 1e-15);

  const Tensor hand = predict_z0(z, Tensor({2}, {0.5, 0.1}), 500, s);
  CHECK(std::abs(hand[0] - -0.238443020619609179087641919408) <= 1e-14);
  CHECK(std::abs(hand[1] - -2.444613452160657009300594043) <= 1e-14);
}

TEST_CASE("invert step undoes denoise step for every schedule pair") {
  const NoiseSchedule s = build_schedule(1000, 50);
  std::mt19937_64 rng(9);
  for (int k = 0; k < s.sampling_steps(); ++k) {
    const int t = s.timesteps()[static_cast<std::size_t>(k)];
    const int t_prev = s.previous_timestep(k);
    const Tensor z = random_tensor(rng, {3, 4, 4}, -3, 3);
    const Tensor eps = random_tensor(rng, {3, 4, 4}, -3, 3);
    const Tensor back = ddim_invert_step(ddim_denoise_step(z, eps, t, t_prev, s), eps, t_prev, t, s);
    CHECK(morph::testing::max_abs_diff(back, z) <= 1e-10);

    const Tensor zero({3, 4, 4});
    const Tensor up = ddim_invert_step(z, zero, t_prev, t, s);
    const double factor = std::sqrt(s.alpha_bar(t) / s.alpha_bar(t_prev));
    CHECK(std::abs(up[0] - z[0] * factor) <= 1e-14);
  }
}

TEST_CASE("inversion norm growth stays within the closed-form bound") {
  const NoiseSchedule s = build_schedule(1000, 50);
  std::mt19937_64 rng(12);
  Tensor z = random_tensor(rng, {12, 4, 4});
  for (int k = s.sampling_steps() - 1; k >= 0; --k) {
    const int t = s.timesteps()[static_cast<std::size_t>(k)];
    const int t_prev = s.previous_timestep(k);
    const Tensor eps = random_tensor(rng, {12, 4, 4});
    const double ratio = std::sqrt(s.alpha_bar(t) / s.alpha_bar(t_prev));
    const double eps_coef =
        std::abs(std::sqrt(1.0 - s.alpha_bar(t)) - ratio * std::sqrt(1.0 - s.alpha_bar(t_prev)));
    const double bound = ratio * l2_norm(z) + eps_coef * l2_norm(eps);
    z = ddim_invert_step(z, eps, t_prev, t, s);
    CHECK(l2_norm(z) <= bound * (1.0 + 1e-12));
  }
}
