#pragma once

// Classic capture-file persistence (24-byte global header, 16-byte record
// headers, all little-endian, link type 1 = Ethernet).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "padsteg/frame.hpp"

namespace padsteg {

inline constexpr std::uint32_t kCaptureMagic = 0xA1B2C3D4;
inline constexpr std::uint32_t kCaptureSnaplen = 65535;
inline constexpr std::uint32_t kLinkTypeEthernet = 1;

struct TraceRecord {
  std::uint32_t ts_sec = 0;
  std::uint32_t ts_usec = 0;
  Bytes data;
  std::uint32_t orig_len = 0;  // 0 means data.size()

  double timestamp() const { return ts_sec + ts_usec * 1e-6; }
  bool undersized() const { return data.size() < kMinFrameLen; }

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Trace {
  std::vector<TraceRecord> records;

  /// Appends a frame stamped at `seconds` (floored to microseconds).
  void append(double seconds, const EthernetFrame& frame);
  void append(double seconds, Bytes data);

  bool timestamps_nondecreasing() const;

  friend bool operator==(const Trace&, const Trace&) = default;
};

void write_trace(const Trace& trace, std::ostream& out);
void write_trace(const Trace& trace, const std::filesystem::path& path);
Bytes encode_trace(const Trace& trace);

/// Throws Error(NotACapture) for a bad magic or link type and
/// Error(RecordError) with the byte offset of a truncated record.
Trace read_trace(std::istream& in);
Trace read_trace(const std::filesystem::path& path);
Trace decode_trace(ByteView bytes);

}  // namespace padsteg
