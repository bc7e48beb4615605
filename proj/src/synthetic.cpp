#include "morph/synthetic.hpp"

#include <cmath>
#include <numbers>

namespace morph::synthetic {

std::vector<Tensor> moving_shapes(std::size_t frames, std::size_t height, std::size_t width) {
  std::vector<Tensor> out;
  out.reserve(frames);
  const double H = static_cast<double>(height), W = static_cast<double>(width);
  for (std::size_t f = 0; f < frames; ++f) {
    const double phase = frames > 1 ? static_cast<double>(f) / static_cast<double>(frames - 1) : 0.0;
    const double cx = W * (0.25 + 0.5 * phase), cy = H * 0.45;
    const double radius = 0.18 * std::min(H, W);
    const double bar_y = H * (0.75 - 0.1 * phase);
    Tensor img({3, height, width});
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double u = static_cast<double>(x) / W, v = static_cast<double>(y) / H;
        double r = -0.6 + 0.5 * u, g = -0.4 + 0.6 * v, b = 0.2 - 0.3 * u;
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        if (dx * dx + dy * dy < radius * radius) {
          r = 0.8;
          g = 0.3;
          b = -0.5;
        }
        if (std::abs(static_cast<double>(y) - bar_y) < 0.06 * H && u > 0.1 && u < 0.9) {
          r = -0.8;
          g = -0.7;
          b = 0.7;
        }
        img.at(0, y, x) = r;
        img.at(1, y, x) = g;
        img.at(2, y, x) = b;
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

Tensor style_image(Pattern pattern, std::size_t height, std::size_t width) {
  Tensor img({3, height, width});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double u = static_cast<double>(x), v = static_cast<double>(y);
      double r = 0, g = 0, b = 0;
      switch (pattern) {
        case Pattern::warm_stripes: {
          const double s = std::sin(2.0 * std::numbers::pi * (u + 0.5 * v) / 8.0);
          r = s > 0 ? 0.95 : 0.4;
          g = s > 0 ? 0.7 : -0.6;
          b = s > 0 ? -0.2 : -0.9;
          break;
        }
        case Pattern::cool_checker: {
          const bool on = ((x / 4) + (y / 4)) % 2 == 0;
          r = on ? -0.9 : 0.9;
          g = on ? -0.3 : 0.9;
          b = on ? 0.9 : 0.95;
          break;
        }
        case Pattern::soft_noise: {
          const double s = std::sin(0.37 * u) * std::cos(0.23 * v) + 0.5 * std::sin(0.11 * (u + v));
          r = 0.5 * s;
          g = 0.2 + 0.3 * std::cos(0.19 * u);
          b = -0.3 * s;
          break;
        }
      }
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  }
  return img;
}

}  // namespace morph::synthetic
