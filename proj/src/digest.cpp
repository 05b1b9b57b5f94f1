#include "padsteg/digest.hpp"

#include <openssl/evp.h>

#include <string>

#include "padsteg/error.hpp"

namespace padsteg {

Digest128 Md5Digest::compute(ByteView message) const {
  Digest128 out{};
  unsigned int len = 0;
  if (EVP_Digest(message.data(), message.size(), out.data(), &len, EVP_md5(), nullptr) != 1 ||
      len != out.size()) {
    throw Error(ErrorCode::Io, "MD5 computation failed");
  }
  return out;
}

std::shared_ptr<const Digest> default_digest() {
  static const auto md5 = std::make_shared<const Md5Digest>();
  return md5;
}

std::shared_ptr<const Digest> digest_by_name(std::string_view name) {
  if (name == "md5") return default_digest();
  throw Error(ErrorCode::InvalidConfig, "unknown digest '" + std::string(name) + "'");
}

}  // namespace padsteg
