#include "morph/config.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <map>
#include <set>
#include <sstream>

#include "morph/errors.hpp"
#include "morph/io.hpp"

namespace morph {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(fmt::format("config key '{}': malformed value '{}'", key, value));
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("config key '{}': malformed value '{}'", key, value));
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(fmt::format("config key '{}': expected true/false, got '{}'", key, value));
}

std::vector<int> parse_layers(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  return out;
}

}  // namespace

void MorphConfig::validate() const {
  if (train_steps < 1) throw ConfigError("train_steps must be positive");
  if (steps < 1 || steps > train_steps) throw ConfigError(fmt::format("steps must be in [1, {}]", train_steps));
  if (t_qend < 0 || t_qend > train_steps) throw ConfigError(fmt::format("t_qend must be in [0, {}]", train_steps));
  if (t_a < 0 || t_a > train_steps + 1) {
    throw ConfigError(fmt::format("t_a must be in [0, {}] ({} disables AdaIN)", train_steps + 1, train_steps + 1));
  }
  if (!(lambda_alpha >= 0.0) || !std::isfinite(lambda_alpha)) throw ConfigError("lambda_alpha must be >= 0");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps must be > 0");
  if (frames < 0) throw ConfigError("frames must be >= 0");
  if (presample_steps < 1 || presample_steps > steps) {
    throw ConfigError(fmt::format("presample_steps {} must be in [1, steps={}]", presample_steps, steps));
  }
  std::set<int> seen;
  for (int l : injection_layers) {
    if (l < 0) throw ConfigError(fmt::format("injection layer {} is negative", l));
    if (!seen.insert(l).second) throw ConfigError(fmt::format("injection layer {} listed twice", l));
  }
}

MorphConfig parse_config(std::string_view text) {
  MorphConfig c;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key=value", line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(fmt::format("config key '{}' given twice", key));
    if (key == "steps") c.steps = parse_number<int>(key, value);
    else if (key == "train_steps") c.train_steps = parse_number<int>(key, value);
    else if (key == "t_qend") c.t_qend = parse_number<int>(key, value);
    else if (key == "t_a") c.t_a = parse_number<int>(key, value);
    else if (key == "lambda_alpha") c.lambda_alpha = parse_real(key, value);
    else if (key == "asdm_enabled") c.asdm_enabled = parse_bool(key, value);
    else if (key == "injection_layers") c.injection_layers = parse_layers(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "feature_seed") c.feature_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "eps") c.eps = parse_real(key, value);
    else if (key == "frames") c.frames = parse_number<int>(key, value);
    else if (key == "latent_blend") c.latent_blend = parse_bool(key, value);
    else if (key == "presample_steps") c.presample_steps = parse_number<int>(key, value);
    else throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
  c.validate();
  return c;
}

std::string to_ini(const MorphConfig& c) {
  std::string out;
  out += fmt::format("steps={}\n", c.steps);
  out += fmt::format("train_steps={}\n", c.train_steps);
  out += fmt::format("t_qend={}\n", c.t_qend);
  out += fmt::format("t_a={}\n", c.t_a);
  out += fmt::format("lambda_alpha={}\n", format_real(c.lambda_alpha));
  out += fmt::format("asdm_enabled={}\n", c.asdm_enabled);
  out += fmt::format("injection_layers={}\n", fmt::join(c.injection_layers, ","));
  out += fmt::format("seed={}\n", c.seed);
  out += fmt::format("feature_seed={}\n", c.feature_seed);
  out += fmt::format("eps={}\n", format_real(c.eps));
  out += fmt::format("frames={}\n", c.frames);
  out += fmt::format("latent_blend={}\n", c.latent_blend);
  out += fmt::format("presample_steps={}\n", c.presample_steps);
  return out;
}

nlohmann::json to_json(const MorphConfig& c) {
  return nlohmann::json{{"steps", c.steps},
                        {"train_steps", c.train_steps},
                        {"t_qend", c.t_qend},
                        {"t_a", c.t_a},
                        {"lambda_alpha", c.lambda_alpha},
                        {"asdm_enabled", c.asdm_enabled},
                        {"injection_layers", c.injection_layers},
                        {"seed", c.seed},
                        {"feature_seed", c.feature_seed},
                        {"eps", c.eps},
                        {"frames", c.frames},
                        {"latent_blend", c.latent_blend},
                        {"presample_steps", c.presample_steps}};
}

MorphConfig config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"steps", "train_steps", "t_qend", "t_a", "lambda_alpha",
                                           "asdm_enabled", "injection_layers", "seed", "feature_seed",
                                           "eps", "frames", "latent_blend", "presample_steps"};
  if (!j.is_object()) throw ConfigError("config JSON must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
  MorphConfig c;
  try {
    if (j.contains("steps")) c.steps = j.at("steps").get<int>();
    if (j.contains("train_steps")) c.train_steps = j.at("train_steps").get<int>();
    if (j.contains("t_qend")) c.t_qend = j.at("t_qend").get<int>();
    if (j.contains("t_a")) c.t_a = j.at("t_a").get<int>();
    if (j.contains("lambda_alpha")) c.lambda_alpha = j.at("lambda_alpha").get<double>();
    if (j.contains("asdm_enabled")) c.asdm_enabled = j.at("asdm_enabled").get<bool>();
    if (j.contains("injection_layers")) c.injection_layers = j.at("injection_layers").get<std::vector<int>>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("feature_seed")) c.feature_seed = j.at("feature_seed").get<std::uint64_t>();
    if (j.contains("eps")) c.eps = j.at("eps").get<double>();
    if (j.contains("frames")) c.frames = j.at("frames").get<int>();
    if (j.contains("latent_blend")) c.latent_blend = j.at("latent_blend").get<bool>();
    if (j.contains("presample_steps")) c.presample_steps = j.at("presample_steps").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace morph
