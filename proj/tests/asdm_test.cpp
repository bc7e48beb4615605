#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "morph/asdm.hpp"

using namespace morph;

TEST_CASE("alpha_mid at a symmetric crossing") {
  CHECK(find_alpha_mid({{0, 1, 2, 3}, {3, 2, 1, 0}}) == 0.5);
}

TEST_CASE("alpha_mid interpolates the first sign change") {
  // g = d0 - d1 = [-1, 1, 1, 1]: zero halfway between frames 0 and 1, normalized by N-1 = 3.
  CHECK(std::abs(find_alpha_mid({{0, 2, 2, 2}, {1, 1, 1, 1}}) - 0.5 / 3.0) <= 1e-15);
  // g = [4, 4, 0.5, -1]: downward crossing a third of the way from frame 2 to 3.
  CHECK(std::abs(find_alpha_mid({{5, 5, 1.5, 0.5}, {1, 1, 1, 1.5}}) - (2.0 + 1.0 / 3.0) / 3.0) <= 1e-15);
}

TEST_CASE("alpha_mid falls back to 0.5 without a crossing") {
  CHECK(find_alpha_mid({{0, 0.5, 1}, {2, 2, 2}}) == 0.5);
  CHECK(find_alpha_mid({{1, 1, 1}, {1, 1, 1}}) == 0.5);
  CHECK_THROWS_AS(find_alpha_mid({{1}, {1}}), std::invalid_argument);
  CHECK_THROWS_AS(find_alpha_mid({{1, 2}, {1}}), std::invalid_argument);
  CHECK_THROWS_AS(find_alpha_mid({{1, -2}, {1, 1}}), std::invalid_argument);
}

TEST_CASE("smax substitutions") {
  CHECK(smax(0.5, 7.0) == 1.0);
  CHECK(std::abs(smax(0.3, 5.0) - 2.0) <= 1e-15);
  CHECK(smax(1.0, 10.0) == 6.0);
  CHECK_THROWS_AS(smax(1.2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(smax(0.2, -1.0), std::invalid_argument);
}

TEST_CASE("balanced transition keeps the linear schedule") {
  for (std::size_t n : {2u, 5u, 8u, 33u}) {
    CHECK(build_alpha_schedule(n, 0.5, 5.0) == AlphaSchedule::linear(n));
    CHECK(build_alpha_schedule(n, 0.1, 0.0) == AlphaSchedule::linear(n));
    CHECK(build_alpha_schedule(n, 0.9, 0.0) == AlphaSchedule::linear(n));
  }
}

TEST_CASE("hand-evaluated five-frame schedule") {
  // ramp [1, 4/3, 5/3, 2] on diffs of 1/4 -> cumsum [0, 1/4, 7/12, 1, 3/2] -> / (3/2).
  const AlphaSchedule s = build_alpha_schedule(5, 0.3, 5.0);
  const double expected[] = {0.0, 1.0 / 6.0, 7.0 / 18.0, 2.0 / 3.0, 1.0};
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(s[i] - expected[i]) <= 1e-12);
}

TEST_CASE("random schedules are strictly increasing with pinned endpoints") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> mid(0.0, 1.0), lam(0.0, 20.0);
  std::uniform_int_distribution<std::size_t> frames(2, 64);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = frames(rng);
    const AlphaSchedule s = build_alpha_schedule(n, mid(rng), lam(rng));
    REQUIRE(s.size() == n);
    CHECK(s[0] == 0.0);
    CHECK(s[n - 1] == 1.0);
    for (std::size_t i = 1; i < n; ++i) CHECK(s[i] > s[i - 1]);
  }
}

TEST_CASE("schedule warps in the direction of alpha_mid") {
  const AlphaSchedule linear = AlphaSchedule::linear(9);
  for (double mid : {0.0, 0.2, 0.45}) {
    const AlphaSchedule s = build_alpha_schedule(9, mid, 5.0);
    for (std::size_t i = 1; i + 1 < 9; ++i) CHECK(s[i] <= linear[i]);
  }
  for (double mid : {0.55, 0.8, 1.0}) {
    const AlphaSchedule s = build_alpha_schedule(9, mid, 5.0);
    for (std::size_t i = 1; i + 1 < 9; ++i) CHECK(s[i] >= linear[i]);
  }
}

TEST_CASE("schedule is continuous in lambda") {
  const double delta = 1e-6;
  for (double mid : {0.1, 0.3, 0.7}) {
    for (double lambda : {0.5, 5.0, 10.0}) {
      const AlphaSchedule a = build_alpha_schedule(12, mid, lambda);
      const AlphaSchedule b = build_alpha_schedule(12, mid, lambda + delta);
      double worst = 0.0;
      for (std::size_t i = 0; i < 12; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
      CHECK(worst <= 10.0 * delta);
    }
  }
}

TEST_CASE("alpha schedule invariants are enforced") {
  CHECK_THROWS_AS(AlphaSchedule({0.1, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(AlphaSchedule({0.0, 0.9}), std::invalid_argument);
  CHECK_THROWS_AS(AlphaSchedule({0.0, 0.6, 0.4, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(AlphaSchedule(std::vector<double>{}), std::invalid_argument);
  CHECK_NOTHROW(AlphaSchedule({0.0}));
  CHECK(AlphaSchedule::hard_switch(8).values() == std::vector<double>{0, 0, 0, 0, 1, 1, 1, 1});
  CHECK_THROWS_AS(build_alpha_schedule(1, 0.3, 5.0), std::invalid_argument);
}
