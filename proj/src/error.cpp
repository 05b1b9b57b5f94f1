#include "padsteg/error.hpp"

namespace padsteg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OversizePayload: return "OversizePayload";
    case ErrorCode::PaddingLengthMismatch: return "PaddingLengthMismatch";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::ZeroNonce: return "ZeroNonce";
    case ErrorCode::BadLength: return "BadLength";
    case ErrorCode::MessageTooLong: return "MessageTooLong";
    case ErrorCode::IncompleteOnClose: return "IncompleteOnClose";
    case ErrorCode::UnknownPeer: return "UnknownPeer";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ConfigConflict: return "ConfigConflict";
    case ErrorCode::NotVulnerable: return "NotVulnerable";
    case ErrorCode::NotACapture: return "NotACapture";
    case ErrorCode::RecordError: return "RecordError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what, std::optional<std::uint64_t> offset)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), offset_(offset) {}

}  // namespace padsteg
