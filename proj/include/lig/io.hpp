#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lig/core.hpp"
#include "lig/pipeline.hpp"

namespace lig {

/// Reads an 8-bit grayscale or RGB PNG into [0, 1] samples (v / 255).
Image load_image(const std::filesystem::path& path);

/// Clamps to [0, 1], quantizes with round-half-up and writes an 8-bit PNG.
void save_image(const Image& img, const std::filesystem::path& path);

/// 8-bit quantization used by save_image.
std::uint8_t quantize_sample(float v);

// Model file, all little-endian:
//   "LIG1" | u32 version = 1 | u32 full_w | u32 full_h | u8 channels |
//   u8 level_count | per level { u32 w | u32 h | u64 n | f32 mu[2n] |
//   f32 cov[3n] | f32 color[C n] } | f32 res_min | f32 res_max
// Two-level models store the coarse level first.
inline constexpr std::uint32_t kModelVersion = 1;

std::vector<std::uint8_t> encode_model(const LogModel& model);
LogModel decode_model(std::span<const std::uint8_t> bytes);

void save_model(const LogModel& model, const std::filesystem::path& path);
LogModel load_model(const std::filesystem::path& path);

}  // namespace lig
