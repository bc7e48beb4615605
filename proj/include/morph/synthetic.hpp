#pragma once

#include <cstddef>
#include <vector>

#include "morph/tensor.hpp"

namespace morph::synthetic {

/// Procedural source clip: a gradient backdrop with a disk and a bar that
/// translate smoothly across frames. Values in [-1,1], shape [3,H,W].
std::vector<Tensor> moving_shapes(std::size_t frames, std::size_t height, std::size_t width);

enum class Pattern { warm_stripes, cool_checker, soft_noise };

/// High-contrast procedural style image in [-1,1], shape [3,H,W].
Tensor style_image(Pattern pattern, std::size_t height, std::size_t width);

}  // namespace morph::synthetic
