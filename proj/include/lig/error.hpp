#pragma once

#include <stdexcept>
#include <string>

namespace lig {

// Numeric values are mirrored one-to-one by lig_status in lig.h.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kDegenerateCovariance = 3,
  kNonFinite = 4,
  kIo = 5,
  kFileNotFound = 6,
  kUnsupportedBitDepth = 7,
  kUnsupportedColorType = 8,
  kCorruptImage = 9,
  kBadMagic = 10,
  kUnsupportedVersion = 11,
  kTruncated = 12,
  kLengthOverflow = 13,
  kMalformedModel = 14,
  kInternal = 15,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lig
