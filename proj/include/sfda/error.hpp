#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sfda {

enum class ErrorCode {
  // numerical / data validation
  kEmptyClass,
  kDimensionMismatch,
  kNotPositiveDefinite,
  kLabelMismatch,
  kSingleClassDominates,
  kHeterogeneousProjection,
  kKTooLarge,
  kLengthMismatch,
  kZeroVariance,
  kInvalidArgument,
  kSpecInvalid,
  // file formats
  kBadMagic,
  kVersionUnsupported,
  kTruncatedPayload,
  kNonFiniteValue,
  kLabelOutOfRange,
  kParseError,
  // filesystem
  kIoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for errors caused by the filesystem rather than by file contents.
constexpr bool is_io_error(ErrorCode code) noexcept {
  return code == ErrorCode::kIoError;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the error-code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kLabelMismatch: return "LabelMismatch";
    case ErrorCode::kSingleClassDominates: return "SingleClassDominates";
    case ErrorCode::kHeterogeneousProjection: return "HeterogeneousProjection";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kSpecInvalid: return "SpecInvalid";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace sfda
