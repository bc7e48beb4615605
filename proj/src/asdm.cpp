#include "morph/asdm.hpp"

#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace morph {

void DistanceCurves::validate() const {
  if (d0.size() != d1.size()) throw std::invalid_argument("distance curves differ in length");
  if (d0.size() < 2) throw std::invalid_argument("distance curves need at least two frames");
  for (std::size_t i = 0; i < d0.size(); ++i) {
    if (!std::isfinite(d0[i]) || !std::isfinite(d1[i]) || d0[i] < 0.0 || d1[i] < 0.0) {
      throw std::invalid_argument(fmt::format("distance curves: invalid value at frame {}", i));
    }
  }
}

AlphaSchedule::AlphaSchedule(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("alpha schedule is empty");
  if (values_.front() != 0.0) throw std::invalid_argument("alpha schedule must start at 0");
  if (values_.size() > 1 && values_.back() != 1.0) throw std::invalid_argument("alpha schedule must end at 1");
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (!(values_[i] >= values_[i - 1])) throw std::invalid_argument("alpha schedule must be non-decreasing");
  }
}

AlphaSchedule AlphaSchedule::linear(std::size_t frames) {
  if (frames == 0) throw std::invalid_argument("alpha schedule needs at least one frame");
  std::vector<double> v(frames, 0.0);
  for (std::size_t i = 1; i < frames; ++i) v[i] = static_cast<double>(i) / static_cast<double>(frames - 1);
  return AlphaSchedule(std::move(v));
}

AlphaSchedule AlphaSchedule::hard_switch(std::size_t frames) {
  if (frames < 2) throw std::invalid_argument("hard switch needs at least two frames");
  std::vector<double> v(frames, 0.0);
  for (std::size_t i = frames / 2; i < frames; ++i) v[i] = 1.0;
  return AlphaSchedule(std::move(v));
}

double find_alpha_mid(const DistanceCurves& curves) {
  curves.validate();
  const std::size_t n = curves.frames();
  for (std::size_t f = 0; f + 1 < n; ++f) {
    const double g0 = curves.d0[f] - curves.d1[f];
    const double g1 = curves.d0[f + 1] - curves.d1[f + 1];
    const bool crosses = (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0);
    if (!crosses) continue;
    const double fraction = g0 / (g0 - g1);
    return (static_cast<double>(f) + fraction) / static_cast<double>(n - 1);
  }
  return 0.5;
}

double smax(double alpha_mid, double lambda) {
  if (!(alpha_mid >= 0.0 && alpha_mid <= 1.0)) throw std::invalid_argument("alpha_mid outside [0,1]");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  return 1.0 + lambda * std::abs(alpha_mid - 0.5);
}

AlphaSchedule build_alpha_schedule(std::size_t frames, double alpha_mid, double lambda) {
  if (frames < 2) throw std::invalid_argument("alpha schedule needs at least two frames");
  const double peak = smax(alpha_mid, lambda);
  const AlphaSchedule baseline = AlphaSchedule::linear(frames);
  if (alpha_mid == 0.5 || peak == 1.0) return baseline;

  const std::size_t diffs = frames - 1;
  std::vector<double> cumulative(frames, 0.0);
  for (std::size_t i = 0; i < diffs; ++i) {
    const double pos = diffs == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(diffs - 1);
    const double ramp = alpha_mid < 0.5 ? 1.0 + (peak - 1.0) * pos : peak - (peak - 1.0) * pos;
    cumulative[i + 1] = cumulative[i] + (baseline[i + 1] - baseline[i]) * ramp;
  }
  const double total = cumulative.back();
  std::vector<double> values(frames);
  for (std::size_t i = 0; i < frames; ++i) values[i] = cumulative[i] / total;
  values.back() = 1.0;
  return AlphaSchedule(std::move(values));
}

}  // namespace morph
