#include "lig/error.hpp"

namespace lig {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kDegenerateCovariance: return "degenerate_covariance";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFileNotFound: return "file_not_found";
    case ErrorCode::kUnsupportedBitDepth: return "unsupported_bit_depth";
    case ErrorCode::kUnsupportedColorType: return "unsupported_color_type";
    case ErrorCode::kCorruptImage: return "corrupt_image";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kLengthOverflow: return "length_overflow";
    case ErrorCode::kMalformedModel: return "malformed_model";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace lig
