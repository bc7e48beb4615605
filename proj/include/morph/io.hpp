#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "morph/tensor.hpp"

namespace morph {

/// Binary tensor file: "STNS", u8 version (1), u8 dtype (0 = f32 LE), u8 rank,
/// rank x u64 LE extents, then the row-major payload.
namespace tensor_file {
inline constexpr char kMagic[4] = {'S', 'T', 'N', 'S'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kFloat32 = 0;
}  // namespace tensor_file

std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(std::string_view bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

/// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// 8-bit RGB PNG -> [3,H,W] in [-1,1] (u8/255 mapped affinely).
Tensor read_png(const std::filesystem::path& path);
/// [3,H,W] in [-1,1] -> 8-bit RGB PNG; values are clamped and rounded.
void write_png(const std::filesystem::path& path, const Tensor& image);

/// Quantizes to the 8-bit grid a PNG round trip would produce.
Tensor quantize_u8(const Tensor& image);

/// *.png files in `dir`, sorted lexicographically.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);
std::vector<Tensor> read_frames(const std::filesystem::path& dir);

/// Shortest decimal that round-trips to the same double.
std::string format_real(double x);

}  // namespace morph
