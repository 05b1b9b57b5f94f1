#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>

#include "padsteg/frame.hpp"

namespace padsteg {

using Digest128 = std::array<std::uint8_t, 16>;

/// 128-bit message digest used to authenticate advertisements.
class Digest {
 public:
  virtual ~Digest() = default;
  virtual Digest128 compute(ByteView message) const = 0;
  virtual std::string_view name() const = 0;
};

class Md5Digest final : public Digest {
 public:
  Digest128 compute(ByteView message) const override;
  std::string_view name() const override { return "md5"; }
};

/// Shared MD5 instance.
std::shared_ptr<const Digest> default_digest();

/// Looks a digest up by name ("md5"). Throws Error(InvalidConfig) otherwise.
std::shared_ptr<const Digest> digest_by_name(std::string_view name);

}  // namespace padsteg
