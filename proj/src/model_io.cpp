#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "lig/io.hpp"

namespace lig {
namespace {

constexpr char kMagic[4] = {'L', 'I', 'G', '1'};
constexpr std::uint32_t kMaxDimension = 1u << 20;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32s(std::span<const float> vs) {
    for (float v : vs) f32(v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw Error(ErrorCode::kTruncated, std::string("model file truncated while reading ") + what);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  void f32s(std::span<float> out, const char* what) {
    need(out.size() * 4, what);
    for (float& v : out) v = f32(what);
  }
  std::span<const std::uint8_t> raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_level(Writer& w, const Level& level) {
  w.u32(static_cast<std::uint32_t>(level.width));
  w.u32(static_cast<std::uint32_t>(level.height));
  w.u64(level.cloud.size());
  w.f32s(level.cloud.positions());
  w.f32s(level.cloud.covariances());
  w.f32s(level.cloud.colors());
}

std::uint32_t read_dimension(Reader& r, const char* what) {
  const std::uint32_t v = r.u32(what);
  if (v == 0 || v > kMaxDimension) {
    throw Error(ErrorCode::kMalformedModel,
                std::string("model ") + what + " out of range: " + std::to_string(v));
  }
  return v;
}

Level read_level(Reader& r, int channels, std::uint32_t max_w, std::uint32_t max_h) {
  Level level;
  const std::uint32_t w = read_dimension(r, "level width");
  const std::uint32_t h = read_dimension(r, "level height");
  if (w > max_w || h > max_h) {
    throw Error(ErrorCode::kMalformedModel, "level resolution exceeds full resolution");
  }
  level.width = static_cast<int>(w);
  level.height = static_cast<int>(h);
  const std::uint64_t n = r.u64("point count");
  const std::uint64_t floats_per_point = 5 + static_cast<std::uint64_t>(channels);
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  if (n > kMax / (floats_per_point * 4)) {
    throw Error(ErrorCode::kLengthOverflow,
                "declared point count " + std::to_string(n) + " overflows the payload size");
  }
  const std::uint64_t payload = n * floats_per_point * 4;
  if (payload > r.remaining()) {
    throw Error(ErrorCode::kTruncated, "model declares " + std::to_string(n) + " points but only " +
                                           std::to_string(r.remaining()) + " bytes remain");
  }
  level.cloud = Cloud(static_cast<std::size_t>(n), channels);
  r.f32s(level.cloud.positions(), "positions");
  r.f32s(level.cloud.covariances(), "covariances");
  r.f32s(level.cloud.colors(), "colors");
  return level;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const LogModel& model) {
  if (model.channels < 1 || model.channels > 255) {
    throw Error(ErrorCode::kInvalidArgument, "model channels must be in [1, 255]");
  }
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(model.full_w));
  w.u32(static_cast<std::uint32_t>(model.full_h));
  w.u8(static_cast<std::uint8_t>(model.channels));
  w.u8(model.coarse ? 2 : 1);
  if (model.coarse) write_level(w, *model.coarse);
  write_level(w, model.fine);
  w.f32(model.res_min);
  w.f32(model.res_max);
  return w.take();
}

LogModel decode_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.raw(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "bad model magic (expected LIG1)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kModelVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported model version " + std::to_string(version));
  }
  LogModel model;
  const std::uint32_t full_w = read_dimension(r, "full width");
  const std::uint32_t full_h = read_dimension(r, "full height");
  model.full_w = static_cast<int>(full_w);
  model.full_h = static_cast<int>(full_h);
  model.channels = r.u8("channels");
  if (model.channels == 0) throw Error(ErrorCode::kMalformedModel, "model has zero channels");
  const std::uint8_t levels = r.u8("level count");
  if (levels != 1 && levels != 2) {
    throw Error(ErrorCode::kMalformedModel, "unsupported level count " + std::to_string(levels));
  }
  if (levels == 2) model.coarse = read_level(r, model.channels, full_w, full_h);
  model.fine = read_level(r, model.channels, full_w, full_h);
  if (model.fine.width != model.full_w || model.fine.height != model.full_h) {
    throw Error(ErrorCode::kMalformedModel, "fine level resolution must equal full resolution");
  }
  model.res_min = r.f32("res_min");
  model.res_max = r.f32("res_max");
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kMalformedModel,
                std::to_string(r.remaining()) + " trailing bytes after model payload");
  }
  return model;
}

void save_model(const LogModel& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

LogModel load_model(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kFileNotFound, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_model(bytes);
}

}  // namespace lig
