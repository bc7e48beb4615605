#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace morph {

/// All parameters of a morph run.
struct MorphConfig {
  int steps = 50;
  int train_steps = 1000;
  /// Source queries are injected for t >= t_qend (0 = every step).
  int t_qend = 0;
  /// AdaIN modulates for t >= t_a; train_steps + 1 disables it.
  int t_a = 400;
  double lambda_alpha = 5.0;
  bool asdm_enabled = true;
  std::vector<int> injection_layers{0, 1};
  std::uint64_t seed = 0;
  std::uint64_t feature_seed = 0x5eed;
  double eps = 1e-5;
  /// 0 uses every frame of the input video.
  int frames = 0;
  /// Derive AdaIN targets from interpolated style latents instead of interpolated statistics.
  bool latent_blend = false;
  int presample_steps = 10;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  bool adain_enabled() const { return t_a <= train_steps; }

  friend bool operator==(const MorphConfig&, const MorphConfig&) = default;
};

/// Parses flat key=value text; '#' starts a comment. Unknown keys, duplicate
/// keys and malformed values raise ConfigError. The result is validated.
MorphConfig parse_config(std::string_view text);
std::string to_ini(const MorphConfig& config);

nlohmann::json to_json(const MorphConfig& config);
MorphConfig config_from_json(const nlohmann::json& j);

}  // namespace morph
