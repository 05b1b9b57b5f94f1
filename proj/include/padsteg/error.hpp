#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace padsteg {

enum class ErrorCode {
  OversizePayload,
  PaddingLengthMismatch,
  Truncated,
  Malformed,
  ZeroNonce,
  BadLength,
  MessageTooLong,
  IncompleteOnClose,
  UnknownPeer,
  InvalidConfig,
  ConfigConflict,
  NotVulnerable,
  NotACapture,
  RecordError,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::uint64_t> offset = std::nullopt);

  ErrorCode code() const noexcept { return code_; }

  /// Byte offset (capture files) or record index (analysis) when the error
  /// points at a specific location in an input.
  std::optional<std::uint64_t> offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::uint64_t> offset_;
};

}  // namespace padsteg
