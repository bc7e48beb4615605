#pragma once

#include <vector>

#include "morph/tensor.hpp"

namespace morph {

/// Timestep value standing for the clean latent (cumulative alpha of exactly 1).
inline constexpr int kCleanTimestep = -1;

/// Discrete variance schedule plus the strided DDIM sampling subsequence.
///
/// Betas are spaced linearly in sqrt-space between `beta_start` and `beta_end`.
/// `timesteps` is in denoising order (strictly decreasing, last entry 0).
class NoiseSchedule {
 public:
  static constexpr double kBetaStart = 0.00085;
  static constexpr double kBetaEnd = 0.012;

  NoiseSchedule(int train_steps, int sampling_steps);

  int train_steps() const { return static_cast<int>(beta_.size()); }
  int sampling_steps() const { return static_cast<int>(timesteps_.size()); }

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }
  const std::vector<int>& timesteps() const { return timesteps_; }

  /// Cumulative alpha at t; kCleanTimestep maps to 1.
  double alpha_bar(int t) const;

  /// Timestep following step `index` in denoising order (kCleanTimestep after the last).
  int previous_timestep(int index) const;

  /// Index of t within `timesteps()`, or -1.
  int index_of(int t) const;

 private:
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
  std::vector<int> timesteps_;
};

NoiseSchedule build_schedule(int train_steps, int sampling_steps);

/// Deterministic DDIM update between two cumulative-alpha levels (eta = 0).
Tensor ddim_transfer(const Tensor& z, const Tensor& eps, double alpha_bar_from, double alpha_bar_to);

/// z_t -> z_{t_prev}; requires t > t_prev.
Tensor ddim_denoise_step(const Tensor& z_t, const Tensor& eps, int t, int t_prev, const NoiseSchedule& sched);

/// z_{t_prev} -> z_t, the algebraic inverse of ddim_denoise_step for the same eps.
Tensor ddim_invert_step(const Tensor& z_prev, const Tensor& eps, int t_prev, int t, const NoiseSchedule& sched);

/// Clean-latent estimate (z_t - sqrt(1-abar) eps) / sqrt(abar).
Tensor predict_z0(const Tensor& z_t, const Tensor& eps, int t, const NoiseSchedule& sched);

}  // namespace morph
