#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "lig/io.hpp"

namespace lig {
namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kFileNotFound, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// The simplified libpng reader converts everything to the requested format,
// so the header is checked here to reject inputs we do not accept.
void check_png_header(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (bytes.size() < 33 || !std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin()) ||
      std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw Error(ErrorCode::kCorruptImage, "not a PNG stream: " + name);
  }
  const int bit_depth = bytes[24];
  const int color_type = bytes[25];
  switch (color_type) {
    case PNG_COLOR_TYPE_GRAY:
    case PNG_COLOR_TYPE_RGB:
      break;
    case PNG_COLOR_TYPE_GRAY_ALPHA:
    case PNG_COLOR_TYPE_RGB_ALPHA:
      throw Error(ErrorCode::kUnsupportedColorType, "alpha channel not supported: " + name);
    default:
      throw Error(ErrorCode::kUnsupportedColorType,
                  "unsupported PNG color type " + std::to_string(color_type) + ": " + name);
  }
  if (bit_depth != 8) {
    throw Error(ErrorCode::kUnsupportedBitDepth,
                "unsupported PNG bit depth " + std::to_string(bit_depth) + ": " + name);
  }
}

}  // namespace

std::uint8_t quantize_sample(float v) {
  const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
  if (std::isnan(v)) return 0;
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

Image load_image(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  check_png_header(bytes, path.string());
  const int channels = bytes[25] == PNG_COLOR_TYPE_RGB ? 3 : 1;

  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kCorruptImage, "corrupt PNG " + path.string() + ": " + msg);
  }
  png.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kCorruptImage, "corrupt PNG " + path.string() + ": " + msg);
  }
  Image img(static_cast<int>(png.width), static_cast<int>(png.height), channels);
  auto data = img.data();
  for (std::size_t i = 0; i < pixels.size(); ++i) data[i] = static_cast<float>(pixels[i]) / 255.0f;
  return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "PNG export supports 1 or 3 channels");
  }
  std::vector<std::uint8_t> pixels(img.size());
  const auto data = img.data();
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (!std::isfinite(data[i])) throw Error(ErrorCode::kNonFinite, "save_image: non-finite sample");
    pixels[i] = quantize_sample(data[i]);
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kIo, "cannot write " + path.string() + ": " + msg);
  }
}

}  // namespace lig
