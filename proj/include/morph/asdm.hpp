#pragma once

#include <cstddef>
#include <vector>

namespace morph {

inline constexpr double kDefaultLambdaAlpha = 5.0;

/// Per-frame perceptual distances of a pre-sampled sequence to each style.
struct DistanceCurves {
  std::vector<double> d0;
  std::vector<double> d1;

  std::size_t frames() const { return d0.size(); }
  void validate() const;
};

/// Per-frame interpolation coefficients: starts at 0, ends at 1, non-decreasing.
/// A single-frame schedule is {0}.
class AlphaSchedule {
 public:
  explicit AlphaSchedule(std::vector<double> values);

  static AlphaSchedule linear(std::size_t frames);
  /// alpha = 0 for frames before N/2, 1 from N/2 on.
  static AlphaSchedule hard_switch(std::size_t frames);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const AlphaSchedule&, const AlphaSchedule&) = default;

 private:
  std::vector<double> values_;
};

/// Normalized position of the first sign change of d0 - d1, linearly
/// interpolated between frames; 0.5 when the curves never cross.
double find_alpha_mid(const DistanceCurves& curves);

/// 1 + lambda * |alpha_mid - 0.5|.
double smax(double alpha_mid, double lambda);

/// Linear baseline whose consecutive differences are scaled by a ramp between
/// 1 and smax (rising when alpha_mid < 0.5, falling when > 0.5), cumulatively
/// summed and renormalized to end at 1.
AlphaSchedule build_alpha_schedule(std::size_t frames, double alpha_mid, double lambda);

}  // namespace morph
