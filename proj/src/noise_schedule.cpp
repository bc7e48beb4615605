#include "morph/noise_schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace morph {

NoiseSchedule::NoiseSchedule(int train_steps, int sampling_steps) {
  if (train_steps < 1 || sampling_steps < 1) {
    throw std::invalid_argument("schedule: step counts must be positive");
  }
  if (sampling_steps > train_steps) {
    throw std::invalid_argument("schedule: sampling steps " + std::to_string(sampling_steps) +
                                " exceed train steps " + std::to_string(train_steps));
  }
  const auto n = static_cast<std::size_t>(train_steps);
  beta_.resize(n);
  alpha_bar_.resize(n);
  const double lo = std::sqrt(kBetaStart);
  const double hi = std::sqrt(kBetaEnd);
  double running = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(n - 1);
    const double root = lo + (hi - lo) * frac;
    beta_[t] = root * root;
    running *= 1.0 - beta_[t];
    alpha_bar_[t] = running;
  }
  // Leading spacing: multiples of T/S, emitted in denoising order down to 0.
  const int stride = train_steps / sampling_steps;
  timesteps_.reserve(static_cast<std::size_t>(sampling_steps));
  for (int i = sampling_steps - 1; i >= 0; --i) timesteps_.push_back(i * stride);
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == kCleanTimestep) return 1.0;
  if (t < 0 || t >= train_steps()) {
    throw std::invalid_argument("timestep " + std::to_string(t) + " outside schedule range");
  }
  return alpha_bar_[static_cast<std::size_t>(t)];
}

int NoiseSchedule::previous_timestep(int index) const {
  if (index < 0 || index >= sampling_steps()) throw std::invalid_argument("step index out of range");
  return index + 1 < sampling_steps() ? timesteps_[static_cast<std::size_t>(index + 1)] : kCleanTimestep;
}

int NoiseSchedule::index_of(int t) const {
  for (std::size_t i = 0; i < timesteps_.size(); ++i) {
    if (timesteps_[i] == t) return static_cast<int>(i);
  }
  return -1;
}

NoiseSchedule build_schedule(int train_steps, int sampling_steps) { return NoiseSchedule(train_steps, sampling_steps); }

Tensor ddim_transfer(const Tensor& z, const Tensor& eps, double alpha_bar_from, double alpha_bar_to) {
  require_same_shape(z, eps, "ddim step");
  const double sqrt_from = std::sqrt(alpha_bar_from);
  const double sigma_from = std::sqrt(1.0 - alpha_bar_from);
  const double sqrt_to = std::sqrt(alpha_bar_to);
  const double sigma_to = std::sqrt(1.0 - alpha_bar_to);
  Tensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double z0 = (z[i] - sigma_from * eps[i]) / sqrt_from;
    out[i] = sqrt_to * z0 + sigma_to * eps[i];
  }
  return out;
}

Tensor ddim_denoise_step(const Tensor& z_t, const Tensor& eps, int t, int t_prev, const NoiseSchedule& sched) {
  if (t <= t_prev) {
    throw std::invalid_argument("ddim_denoise_step: t=" + std::to_string(t) + " must exceed t_prev=" +
                                std::to_string(t_prev));
  }
  return ddim_transfer(z_t, eps, sched.alpha_bar(t), sched.alpha_bar(t_prev));
}

Tensor ddim_invert_step(const Tensor& z_prev, const Tensor& eps, int t_prev, int t, const NoiseSchedule& sched) {
  if (t <= t_prev) {
    throw std::invalid_argument("ddim_invert_step: t=" + std::to_string(t) + " must exceed t_prev=" +
                                std::to_string(t_prev));
  }
  return ddim_transfer(z_prev, eps, sched.alpha_bar(t_prev), sched.alpha_bar(t));
}

Tensor predict_z0(const Tensor& z_t, const Tensor& eps, int t, const NoiseSchedule& sched) {
  require_same_shape(z_t, eps, "predict_z0");
  const double abar = sched.alpha_bar(t);
  const double sqrt_abar = std::sqrt(abar);
  const double sigma = std::sqrt(1.0 - abar);
  Tensor out(z_t.shape());
  for (std::size_t i = 0; i < z_t.size(); ++i) out[i] = (z_t[i] - sigma * eps[i]) / sqrt_abar;
  return out;
}

}  // namespace morph
