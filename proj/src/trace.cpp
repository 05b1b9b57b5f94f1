#include "padsteg/trace.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "byte_order.hpp"
#include "padsteg/error.hpp"

namespace padsteg {

using detail::load_le32;
using detail::store_le16;
using detail::store_le32;

namespace {

constexpr std::size_t kGlobalHeaderLen = 24;
constexpr std::size_t kRecordHeaderLen = 16;
constexpr std::uint32_t kSwappedMagic = 0xD4C3B2A1;

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xFF00) | ((v << 8) & 0xFF0000) | (v << 24);
}

}  // namespace

void Trace::append(double seconds, const EthernetFrame& frame) { append(seconds, serialize_frame(frame)); }

void Trace::append(double seconds, Bytes data) {
  const auto micros = static_cast<std::uint64_t>(std::floor(std::max(0.0, seconds) * 1e6));
  TraceRecord rec;
  rec.ts_sec = static_cast<std::uint32_t>(micros / 1000000);
  rec.ts_usec = static_cast<std::uint32_t>(micros % 1000000);
  rec.data = std::move(data);
  records.push_back(std::move(rec));
}

bool Trace::timestamps_nondecreasing() const {
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i - 1];
    const auto& b = records[i];
    if (b.ts_sec < a.ts_sec || (b.ts_sec == a.ts_sec && b.ts_usec < a.ts_usec)) return false;
  }
  return true;
}

Bytes encode_trace(const Trace& trace) {
  std::size_t size = kGlobalHeaderLen;
  for (const auto& r : trace.records) size += kRecordHeaderLen + r.data.size();
  Bytes out(size);
  std::span<std::uint8_t> v(out);
  store_le32(v, 0, kCaptureMagic);
  store_le16(v, 4, 2);
  store_le16(v, 6, 4);
  store_le32(v, 8, 0);   // thiszone
  store_le32(v, 12, 0);  // sigfigs
  store_le32(v, 16, kCaptureSnaplen);
  store_le32(v, 20, kLinkTypeEthernet);

  std::size_t at = kGlobalHeaderLen;
  for (const auto& r : trace.records) {
    const auto incl = static_cast<std::uint32_t>(r.data.size());
    store_le32(v, at, r.ts_sec);
    store_le32(v, at + 4, r.ts_usec);
    store_le32(v, at + 8, incl);
    store_le32(v, at + 12, r.orig_len ? r.orig_len : incl);
    std::copy(r.data.begin(), r.data.end(), out.begin() + static_cast<std::ptrdiff_t>(at + kRecordHeaderLen));
    at += kRecordHeaderLen + r.data.size();
  }
  return out;
}

void write_trace(const Trace& trace, std::ostream& out) {
  const Bytes bytes = encode_trace(trace);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing capture");
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_trace(trace, out);
}

Trace decode_trace(ByteView bytes) {
  if (bytes.size() < kGlobalHeaderLen) throw Error(ErrorCode::NotACapture, "file shorter than a capture header", 0);
  const std::uint32_t magic = load_le32(bytes, 0);
  if (magic != kCaptureMagic && magic != kSwappedMagic) {
    throw Error(ErrorCode::NotACapture, "bad magic number", 0);
  }
  const bool swapped = magic == kSwappedMagic;
  auto u32 = [&](std::size_t at) {
    const std::uint32_t v = load_le32(bytes, at);
    return swapped ? byteswap32(v) : v;
  };
  if (u32(20) != kLinkTypeEthernet) throw Error(ErrorCode::NotACapture, "link type is not Ethernet", 20);

  Trace trace;
  std::size_t at = kGlobalHeaderLen;
  while (at < bytes.size()) {
    if (bytes.size() - at < kRecordHeaderLen) throw Error(ErrorCode::RecordError, "truncated record header", at);
    TraceRecord r;
    r.ts_sec = u32(at);
    r.ts_usec = u32(at + 4);
    const std::uint32_t incl = u32(at + 8);
    r.orig_len = u32(at + 12);
    if (bytes.size() - at - kRecordHeaderLen < incl) {
      throw Error(ErrorCode::RecordError, "record data runs past end of file", at);
    }
    const auto begin = bytes.begin() + static_cast<std::ptrdiff_t>(at + kRecordHeaderLen);
    r.data.assign(begin, begin + incl);
    if (r.orig_len == incl) r.orig_len = 0;
    trace.records.push_back(std::move(r));
    at += kRecordHeaderLen + incl;
  }
  return trace;
}

Trace read_trace(std::istream& in) {
  const Bytes bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_trace(bytes);
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_trace(in);
}

}  // namespace padsteg
