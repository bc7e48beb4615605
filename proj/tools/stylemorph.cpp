// stylemorph: command-line driver for inversion, morphing, alpha curves and metrics.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "morph/errors.hpp"
#include "morph/io.hpp"
#include "morph/pipeline.hpp"
#include "morph/synthetic.hpp"

namespace fs = std::filesystem;
using namespace morph;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingFile = 3,
  kMalformed = 4,
  kConfig = 5,
  kInvalidInput = 6,
  kNumeric = 7,
  kMissingCache = 8,
};

int fail(ExitCode code, const char* kind, const std::string& message) {
  std::string line = message;
  for (char& c : line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error: " << kind << ": " << line << '\n';
  return code;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_cell(const std::string& cell, const fs::path& file) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw FormatError(fmt::format("{}: malformed number '{}'", file.string(), cell));
  }
}

/// Reads a headed CSV and returns the named numeric columns.
std::vector<std::vector<double>> read_columns(const fs::path& file, const std::vector<std::string>& names) {
  std::istringstream in(read_file(file));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(file.string() + ": empty CSV");
  const auto header = split_csv_line(line);
  std::vector<std::size_t> index;
  for (const auto& name : names) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError(fmt::format("{}: missing column '{}'", file.string(), name));
    index.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::vector<double>> cols(names.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw FormatError(fmt::format("{}: ragged row '{}'", file.string(), line));
    for (std::size_t c = 0; c < names.size(); ++c) cols[c].push_back(parse_cell(cells[index[c]], file));
  }
  return cols;
}

std::string schedule_csv(const AlphaSchedule& schedule, const DistanceCurves* curves) {
  std::string out = curves ? "frame,alpha,d0,d1\n" : "frame,alpha\n";
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    out += fmt::format("{},{}", i, format_real(schedule[i]));
    if (curves) out += fmt::format(",{},{}", format_real(curves->d0[i]), format_real(curves->d1[i]));
    out += '\n';
  }
  return out;
}

MorphConfig load_config(const std::string& config_path, const std::string& manifest_path) {
  if (!manifest_path.empty()) {
    std::istringstream in(read_file(manifest_path));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("{}: {}", manifest_path, e.what()));
      }
      if (j.value("record", "") == "config") return config_from_json(j.at("config"));
    }
    throw FormatError(manifest_path + ": no config record");
  }
  if (!config_path.empty()) return parse_config(read_file(config_path));
  return MorphConfig{};
}

int run_invert(const std::string& video_dir, const std::string& config_path, const std::string& out_dir) {
  const MorphConfig config = load_config(config_path, "");
  const MorphPipeline pipeline(config);
  const auto frames = read_frames(video_dir);
  const VideoInversion inv = pipeline.invert_video(frames);
  const fs::path out(out_dir);
  for (std::size_t i = 0; i < inv.noise.size(); ++i) {
    write_tensor(out / fmt::format("latent_{:04}.stns", i), inv.noise[i]);
  }
  spill_cache(inv.cache, out / "cache");
  write_file_atomic(out / "config.ini", to_ini(config));
  return kOk;
}

int run_morph(const std::string& video_dir, const std::string& style0_path, const std::string& style1_path,
              const std::string& config_path, const std::string& manifest_path, const std::string& out_dir) {
  const MorphConfig config = load_config(config_path, manifest_path);
  const MorphPipeline pipeline(config);
  const auto video = read_frames(video_dir);
  const Tensor style0 = read_png(style0_path);
  const Tensor style1 = read_png(style1_path);
  const MorphRun run = pipeline.morph(video, style0, style1);

  const fs::path out(out_dir);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < run.frames.size(); ++i) {
    names.push_back(fmt::format("frame_{:04}.png", i));
    write_png(out / names.back(), run.frames[i]);
  }
  write_file_atomic(out / "schedule.csv", schedule_csv(run.schedule, nullptr));

  std::string manifest;
  manifest += nlohmann::json{{"record", "config"}, {"config", to_json(config)}}.dump() + "\n";
  manifest += nlohmann::json{{"record", "schedule"},
                             {"alpha", run.schedule.values()},
                             {"alpha_mid", run.alpha_mid},
                             {"s_max", run.s_max},
                             {"asdm_enabled", config.asdm_enabled}}
                  .dump() +
              "\n";
  if (!run.curves.d0.empty()) {
    manifest += nlohmann::json{{"record", "curves"}, {"d0", run.curves.d0}, {"d1", run.curves.d1}}.dump() + "\n";
  }
  manifest += nlohmann::json{{"record", "frames"}, {"files", names}}.dump() + "\n";
  manifest += nlohmann::json{{"record", "timings"},
                             {"inversion_s", run.timings.inversion_s},
                             {"presample_s", run.timings.presample_s},
                             {"denoise_s", run.timings.denoise_s},
                             {"total_s", run.timings.total_s}}
                  .dump() +
              "\n";
  write_file_atomic(out / "manifest.jsonl", manifest);
  return kOk;
}

int run_alpha_curve(const std::string& curves_path, double alpha_mid, bool have_mid, double lambda, int frames,
                    const std::string& out_path) {
  std::string csv;
  if (!curves_path.empty()) {
    auto cols = read_columns(curves_path, {"d0", "d1"});
    DistanceCurves curves{std::move(cols[0]), std::move(cols[1])};
    curves.validate();
    const double mid = find_alpha_mid(curves);
    csv = schedule_csv(build_alpha_schedule(curves.frames(), mid, lambda), &curves);
  } else {
    if (!have_mid) throw CLI::RequiredError("--curves or --alpha-mid");
    if (frames < 2) throw std::invalid_argument("--frames must be at least 2");
    csv = schedule_csv(build_alpha_schedule(static_cast<std::size_t>(frames), alpha_mid, lambda), nullptr);
  }
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    write_file_atomic(out_path, csv);
  }
  return kOk;
}

int run_eval(const std::string& frames_dir, const std::string& src_dir, const std::string& style0_path,
             const std::string& style1_path, const std::string& schedule_path, std::uint64_t feature_seed,
             const std::string& format, const std::string& out_path) {
  const auto generated = read_frames(frames_dir);
  const auto source = read_frames(src_dir);
  const Tensor style0 = read_png(style0_path);
  const Tensor style1 = read_png(style1_path);
  AlphaSchedule schedule = AlphaSchedule::linear(generated.size());
  if (!schedule_path.empty()) schedule = AlphaSchedule(read_columns(schedule_path, {"alpha"})[0]);
  const FeatureExtractor extractor(feature_seed);
  const MetricReport r = evaluate_metrics(extractor, generated, source, style0, style1, schedule);
  std::string text;
  if (format == "json") {
    text = nlohmann::json{{"ppl", r.ppl},
                          {"pdv", r.pdv},
                          {"style_loss", r.style_loss},
                          {"structure_distance", r.structure_distance},
                          {"frame_similarity", r.frame_similarity}}
               .dump() +
           "\n";
  } else {
    text = "ppl,pdv,style_loss,structure_distance,frame_similarity\n" +
           fmt::format("{},{},{},{},{}\n", format_real(r.ppl), format_real(r.pdv), format_real(r.style_loss),
                       format_real(r.structure_distance), format_real(r.frame_similarity));
  }
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out_path, text);
  }
  return kOk;
}

int run_synth(const std::string& out_dir, int frames, int size) {
  if (frames < 1 || size < 8 || size % 8 != 0) throw std::invalid_argument("--frames >= 1, --size a multiple of 8");
  const fs::path out(out_dir);
  const auto n = static_cast<std::size_t>(size);
  const auto video = synthetic::moving_shapes(static_cast<std::size_t>(frames), n, n);
  for (std::size_t i = 0; i < video.size(); ++i) write_png(out / "video" / fmt::format("frame_{:04}.png", i), video[i]);
  write_png(out / "style0.png", synthetic::style_image(synthetic::Pattern::warm_stripes, n, n));
  write_png(out / "style1.png", synthetic::style_image(synthetic::Pattern::cool_checker, n, n));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tuning-free video style morphing on a toy latent-diffusion backend"};
  app.require_subcommand(1);

  std::string video, out, config, manifest, style0, style1;
  auto* invert = app.add_subcommand("invert", "DDIM-invert a frame directory and spill latents + attention cache");
  invert->add_option("--video", video, "Directory of PNG frames")->required();
  invert->add_option("--out", out, "Output directory")->required();
  invert->add_option("--config", config, "Run configuration (key=value)");

  auto* morph_cmd = app.add_subcommand("morph", "Generate a style-morphing frame sequence");
  morph_cmd->add_option("--video", video, "Directory of PNG frames")->required();
  morph_cmd->add_option("--style0", style0, "First style image (PNG)")->required();
  morph_cmd->add_option("--style1", style1, "Second style image (PNG)")->required();
  auto* cfg_opt = morph_cmd->add_option("--config", config, "Run configuration (key=value)");
  morph_cmd->add_option("--manifest", manifest, "Reuse the configuration echoed in a run manifest")->excludes(cfg_opt);
  morph_cmd->add_option("--out", out, "Output directory")->required();

  std::string curves, curve_out;
  double alpha_mid = 0.5, lambda = kDefaultLambdaAlpha;
  int frames = 0;
  auto* curve = app.add_subcommand("alpha-curve", "Emit an adaptive alpha schedule as CSV");
  auto* curves_opt = curve->add_option("--curves", curves, "CSV with d0,d1 columns per frame");
  auto* mid_opt = curve->add_option("--alpha-mid", alpha_mid, "Transition point in [0,1]")->excludes(curves_opt);
  curve->add_option("--lambda", lambda, "Scaling strength")->capture_default_str();
  curve->add_option("--frames", frames, "Frame count (with --alpha-mid)")->needs(mid_opt);
  curve->add_option("--out", curve_out, "Write CSV here instead of stdout");

  std::string frames_dir, src_dir, schedule, format = "csv", eval_out;
  std::uint64_t feature_seed = FeatureExtractor::kDefaultSeed;
  auto* eval = app.add_subcommand("eval", "Compute smoothness, stability, style and structure metrics");
  eval->add_option("--frames", frames_dir, "Generated frames directory")->required();
  eval->add_option("--src", src_dir, "Source frames directory")->required();
  eval->add_option("--style0", style0, "First style image")->required();
  eval->add_option("--style1", style1, "Second style image")->required();
  eval->add_option("--schedule", schedule, "CSV with an alpha column (default: linear)");
  eval->add_option("--feature-seed", feature_seed, "Seed of the feature pyramid")->capture_default_str();
  eval->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  eval->add_option("--out", eval_out, "Write metrics here instead of stdout");

  int synth_frames = 8, synth_size = 64;
  auto* synth = app.add_subcommand("synth", "Write the procedural demo clip and style pair");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--frames", synth_frames)->capture_default_str();
  synth->add_option("--size", synth_size)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    if (*invert) return run_invert(video, config, out);
    if (*morph_cmd) return run_morph(video, style0, style1, config, manifest, out);
    if (*curve) return run_alpha_curve(curves, alpha_mid, mid_opt->count() > 0, lambda, frames, curve_out);
    if (*eval) return run_eval(frames_dir, src_dir, style0, style1, schedule, feature_seed, format, eval_out);
    if (*synth) return run_synth(out, synth_frames, synth_size);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  } catch (const MissingFileError& e) {
    return fail(kMissingFile, "missing_file", e.what());
  } catch (const FormatError& e) {
    return fail(kMalformed, "malformed_input", e.what());
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const MissingCacheError& e) {
    return fail(kMissingCache, "missing_cache", e.what());
  } catch (const NumericError& e) {
    return fail(kNumeric, "numeric", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kInvalidInput, "invalid_input", e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "failure", e.what());
  }
  return kUsage;
}
