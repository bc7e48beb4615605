#include "morph/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <png.h>
#include <sstream>

#include "morph/errors.hpp"

namespace morph {

namespace {

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw FormatError("tensor file truncated");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

struct PngFile {
  FILE* fp = nullptr;
  ~PngFile() {
    if (fp) std::fclose(fp);
  }
};

}  // namespace

std::string encode_tensor(const Tensor& t) {
  if (t.rank() == 0 || t.rank() > 255) throw std::invalid_argument("tensor rank must be in [1,255]");
  std::string out(tensor_file::kMagic, 4);
  put<std::uint8_t>(out, tensor_file::kVersion);
  put<std::uint8_t>(out, tensor_file::kFloat32);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
  for (auto e : t.shape()) put<std::uint64_t>(out, e);
  out.reserve(out.size() + 4 * t.size());
  for (double x : t.data()) put<float>(out, static_cast<float>(x));
  return out;
}

Tensor decode_tensor(std::string_view bytes) {
  if (bytes.size() < 7 || std::memcmp(bytes.data(), tensor_file::kMagic, 4) != 0) {
    throw FormatError("tensor file: bad magic");
  }
  std::size_t pos = 4;
  const auto version = take<std::uint8_t>(bytes, pos);
  const auto dtype = take<std::uint8_t>(bytes, pos);
  const auto rank = take<std::uint8_t>(bytes, pos);
  if (version != tensor_file::kVersion) throw FormatError(fmt::format("tensor file: unsupported version {}", version));
  if (dtype != tensor_file::kFloat32) throw FormatError(fmt::format("tensor file: unsupported dtype {}", dtype));
  if (rank == 0) throw FormatError("tensor file: rank 0");
  Shape shape;
  std::size_t count = 1;
  for (int i = 0; i < rank; ++i) {
    const auto e = take<std::uint64_t>(bytes, pos);
    if (e == 0) throw FormatError("tensor file: zero extent");
    shape.push_back(static_cast<std::size_t>(e));
    count *= static_cast<std::size_t>(e);
  }
  if (bytes.size() - pos != 4 * count) {
    throw FormatError(fmt::format("tensor file: payload has {} bytes, header implies {}", bytes.size() - pos, 4 * count));
  }
  std::vector<double> data(count);
  for (auto& x : data) x = static_cast<double>(take<float>(bytes, pos));
  return Tensor(std::move(shape), std::move(data));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) { write_file_atomic(path, encode_tensor(t)); }

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

Tensor read_png(const std::filesystem::path& path) {
  PngFile file;
  file.fp = std::fopen(path.c_str(), "rb");
  if (!file.fp) throw MissingFileError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG: " + path.string());
  }
  png_init_io(png, file.fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth != 8 || (color != PNG_COLOR_TYPE_RGB && color != PNG_COLOR_TYPE_RGB_ALPHA)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("expected 8-bit RGB PNG: " + path.string());
  }
  if (color == PNG_COLOR_TYPE_RGB_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  pixels.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Tensor img({3, height, width});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        img.at(c, y, x) = static_cast<double>(pixels[(y * width + x) * 3 + c]) / 255.0 * 2.0 - 1.0;
      }
    }
  }
  return img;
}

namespace {

png_byte to_u8(double x) {
  const double v = std::round((x + 1.0) * 0.5 * 255.0);
  return static_cast<png_byte>(std::clamp(v, 0.0, 255.0));
}

}  // namespace

Tensor quantize_u8(const Tensor& image) {
  Tensor out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = static_cast<double>(to_u8(image[i])) / 255.0 * 2.0 - 1.0;
  return out;
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) throw std::invalid_argument("write_png expects a [3,H,W] image");
  const std::size_t height = image.dim(1), width = image.dim(2);
  std::vector<png_byte> pixels(height * width * 3);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) pixels[(y * width + x) * 3 + c] = to_u8(image.at(c, y, x));
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    PngFile file;
    file.fp = std::fopen(tmp.c_str(), "wb");
    if (!file.fp) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("libpng initialisation failed");
    }
    std::vector<png_bytep> rows(height);
    for (std::size_t y = 0; y < height; ++y) rows[y] = pixels.data() + y * width * 3;
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("PNG encode failed: " + path.string());
    }
    png_init_io(png, file.fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw MissingFileError("frame directory not found: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw MissingFileError("no .png frames in " + dir.string());
  return out;
}

std::vector<Tensor> read_frames(const std::filesystem::path& dir) {
  std::vector<Tensor> frames;
  for (const auto& p : list_frames(dir)) frames.push_back(read_png(p));
  return frames;
}

std::string format_real(double x) { return fmt::format("{}", x); }

}  // namespace morph
